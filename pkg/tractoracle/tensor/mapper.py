"""
.. autoexception:: UnsupportedOperationError
.. autoclass:: Mapper
.. autofunction:: topological_order
"""

from __future__ import annotations


__copyright__ = "Copyright (C) 2026 TractOracle developers"

__license__ = """
Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is
furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in
all copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN
THE SOFTWARE.
"""

from collections.abc import Callable
from typing import Concatenate, Generic, ParamSpec, TypeVar, cast

from tractoracle.tensor.primitives import Tensor


class UnsupportedOperationError(ValueError):
    pass


ResultT = TypeVar("ResultT")
P = ParamSpec("P")


class Mapper(Generic[ResultT, P]):
    """A visitor for graphs of :class:`~tractoracle.tensor.primitives.Tensor`
    nodes. Each node is dispatched to the method named by its
    :attr:`~tractoracle.tensor.primitives.Tensor.mapper_method` and, if that
    is not found, to the methods named by *mapper_method* along the method
    resolution order of the node's class.

    .. automethod:: handle_unsupported_operation
    .. automethod:: __call__
    """

    def handle_unsupported_operation(self,
            expr: Tensor, *args: P.args, **kwargs: P.kwargs) -> ResultT:
        raise UnsupportedOperationError(
                "{} cannot handle nodes of type {}".format(
                    type(self).__name__, type(expr).__name__))

    def __call__(self,
            expr: Tensor, *args: P.args, **kwargs: P.kwargs) -> ResultT:
        method_name = getattr(expr, "mapper_method", None)
        if method_name is not None:
            method = cast(
                "Callable[Concatenate[Tensor, P], ResultT] | None",
                getattr(self, method_name, None))
            if method is not None:
                return method(expr, *args, **kwargs)

        for cls in type(expr).__mro__[1:]:
            method_name = getattr(cls, "mapper_method", None)
            if method_name:
                method = getattr(self, method_name, None)
                if method:
                    return cast("ResultT", method(expr, *args, **kwargs))

        return self.handle_unsupported_operation(expr, *args, **kwargs)

    rec = __call__


def topological_order(root: Tensor,
        include: Callable[[Tensor], bool] | None = None) -> list[Tensor]:
    """Return the nodes reachable from *root* with every node listed after
    all of its operands. If *include* is given, traversal does not enter
    nodes for which it returns *False*.
    """
    order: list[Tensor] = []
    visited: set[int] = set()

    # iterative post-order, graphs of deep networks exceed the recursion limit
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        if include is not None and not include(node):
            continue
        visited.add(id(node))
        stack.append((node, True))
        for child in node.children:
            if id(child) not in visited:
                stack.append((child, False))

    return order

