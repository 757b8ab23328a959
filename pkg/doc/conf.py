from importlib import metadata
from urllib.request import urlopen


_conf_url = \
        "https://raw.githubusercontent.com/inducer/sphinxconfig/main/sphinxconfig.py"
with urlopen(_conf_url) as _inf:
    exec(compile(_inf.read(), _conf_url, "exec"), globals())

copyright = "2026, TractOracle developers"
release = metadata.version("tractoracle")
version = ".".join(release.split(".")[:2])

# List of patterns, relative to source directory, that match files and
# directories to ignore when looking for source files.
exclude_patterns = ["_build"]

intersphinx_mapping = {
    "numpy": ("https://numpy.org/doc/stable/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
    "python": ("https://docs.python.org/3", None),
    "pytools": ("https://documen.tician.de/pytools/", None),
    "nibabel": ("https://nipy.org/nibabel/", None),
    "immutabledict":
        ("https://immutabledict.corenting.fr/", None)
}
autodoc_type_aliases = {
    "FloatArray": "FloatArray",
    "IntArray": "IntArray",
    "BoolArray": "BoolArray",
    "PointLike": "PointLike",
    "Seed": "Seed",
}

nitpick_ignore_regex = [
    # aliases live behind TYPE_CHECKING imports
    ["py:class", r".*Array"],
    ["py:class", r"Seed"],
    ["py:class", r"PointLike"],
    ["py:class", r"ChoosePolicy"],
    ]
