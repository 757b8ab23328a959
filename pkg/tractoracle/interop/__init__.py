from __future__ import annotations


__doc__ = """
Interoperability
----------------

.. automodule:: tractoracle.interop.nibabel
"""
