"""Syntax trees.

Trees produced from long inputs can be hundreds of thousands of levels deep
(left-recursive lists), so every traversal here is iterative and pickling
goes through a flat postfix encoding.
"""

from __future__ import annotations

import json
from typing import Iterator


class Leaf:
    __slots__ = ("label", "pos")

    def __init__(self, label: str, pos: int = -1):
        self.label = label
        self.pos = pos

    children = ()
    is_leaf = True

    def __eq__(self, other):
        return isinstance(other, Leaf) and self.label == other.label and self.pos == other.pos

    def __hash__(self):
        return hash((self.label, self.pos))

    def __repr__(self):
        return f"Leaf({self.label!r}, {self.pos})"


class Tree:
    __slots__ = ("label", "children")
    is_leaf = False

    def __init__(self, label: str, children=()):
        self.label = label
        self.children = tuple(children)

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return tree_equal(self, other)

    __hash__ = None

    def __repr__(self):
        text = to_sexpr(self)
        return f"Tree({text[:60] + '...' if len(text) > 63 else text})"

    def __reduce__(self):
        return (_from_postfix, (_to_postfix(self),))

    def __str__(self):
        return to_sexpr(self)


def iter_postorder(root) -> Iterator:
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if node.is_leaf or expanded:
            yield node
        else:
            stack.append((node, True))
            for ch in reversed(node.children):
                stack.append((ch, False))


def frontier(root) -> list[str]:
    return [n.label for n in iter_postorder(root) if n.is_leaf]


def leaves(root) -> list[Leaf]:
    return [n for n in iter_postorder(root) if n.is_leaf]


def internal_nodes(root) -> Iterator[Tree]:
    return (n for n in iter_postorder(root) if not n.is_leaf)


def tree_equal(a, b) -> bool:
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if x is y:
            continue
        if x.is_leaf != y.is_leaf or x.label != y.label:
            return False
        if x.is_leaf:
            if x.pos != y.pos:
                return False
            continue
        if len(x.children) != len(y.children):
            return False
        stack.extend(zip(x.children, y.children))
    return True


def depth(root) -> int:
    best = 0
    stack = [(root, 1)]
    while stack:
        node, d = stack.pop()
        best = max(best, d)
        stack.extend((c, d + 1) for c in node.children)
    return best


def _to_postfix(root):
    # leaves encode as (label, pos), internal nodes as (label, None, arity)
    out = []
    for n in iter_postorder(root):
        out.append((n.label, n.pos) if n.is_leaf else (n.label, None, len(n.children)))
    return out


def _from_postfix(items):
    stack: list = []
    for item in items:
        if len(item) == 2:
            stack.append(Leaf(item[0], item[1]))
        else:
            arity = item[2]
            kids = stack[len(stack) - arity:]
            del stack[len(stack) - arity:]
            stack.append(Tree(item[0], kids))
    return stack[0]


def to_sexpr(root) -> str:
    """``(E (F e) + (T (F e) * (F e)))``; leaves print as their label."""
    parts: list[str] = []
    stack = [root]
    while stack:
        node = stack.pop()
        if isinstance(node, str):
            parts.append(node)
        elif node.is_leaf:
            parts.append(node.label)
        else:
            parts.append("(" + node.label)
            stack.append(")")
            for ch in reversed(node.children):
                stack.append(ch)
                stack.append(" ")
    return "".join(parts)


def to_json(root, indent: int | None = None) -> str:
    """JSON ``{label, children}`` (leaves add ``pos``), built iteratively so
    that deep trees do not hit the recursion limit."""
    if indent is not None and depth(root) < 500:
        return json.dumps(to_obj(root), indent=indent)
    parts: list[str] = []
    stack = [root]
    while stack:
        node = stack.pop()
        if isinstance(node, str):
            parts.append(node)
        elif node.is_leaf:
            parts.append(f'{{"label": {json.dumps(node.label)}, "children": [], "pos": {node.pos}}}')
        else:
            parts.append(f'{{"label": {json.dumps(node.label)}, "children": [')
            stack.append("]}")
            for i, ch in enumerate(reversed(node.children)):
                if i:
                    stack.append(", ")
                stack.append(ch)
    return "".join(parts)


def to_obj(root) -> dict:
    built: dict[int, dict] = {}
    for n in iter_postorder(root):
        if n.is_leaf:
            built[id(n)] = {"label": n.label, "children": [], "pos": n.pos}
        else:
            built[id(n)] = {"label": n.label, "children": [built.pop(id(c)) for c in n.children]}
    return built[id(root)]
