#!/usr/bin/env python3
"""Brute-force catalog and feature table for a small corpus.

Reads "question_id<TAB>tree" lines (trees in Kind[label](child,...) form),
enumerates every connected rooted node subset directly, keeps the ones that
retain mandatory children, then applies the support filter and the
occurrence-set merge. Writes the catalog and the presence table.

usage: catalog_oracle.py ASTS MAX_NODES MIN_SUPPORT CATALOG_OUT FEATURES_OUT
"""
import sys

PREFIX_ONE = {"If", "Elif", "While", "Call"}
ALL_CHILDREN = {"Assign", "AugAssign", "ExprStmt", "Attribute", "Subscript",
                "BinOp", "UnaryOp", "BoolOp", "Compare", "Ternary"}


def mandatory_count(kind, n):
    if kind in PREFIX_ONE:
        return min(1, n)
    if kind == "For":
        return min(2, n)
    if kind == "Comprehension":
        return min(3, n)
    if kind in ALL_CHILDREN:
        return n
    return 0


class Node:
    def __init__(self, head):
        self.head = head
        self.kind = head.split("[", 1)[0]
        self.children = []


def parse(text):
    pos = 0

    def node():
        nonlocal pos
        start = pos
        while pos < len(text) and text[pos] not in "(,)":
            if text[pos] == "[":
                pos = text.index("]", pos)
            pos += 1
        n = Node(text[start:pos])
        if pos < len(text) and text[pos] == "(":
            pos += 1
            while True:
                n.children.append(node())
                if text[pos] == ",":
                    pos += 1
                    continue
                pos += 1
                break
        return n

    root = node()
    assert pos == len(text), text
    return root


def flatten(root):
    nodes, parent = [], []

    def walk(n, p):
        idx = len(nodes)
        nodes.append(n)
        parent.append(p)
        for c in n.children:
            walk(c, idx)

    walk(root, -1)
    return nodes, parent


def render(nodes, index_of, keep, i):
    n = nodes[i]
    kids = [index_of[id(c)] for c in n.children if index_of[id(c)] in keep]
    if not kids:
        return n.head
    return n.head + "(" + ",".join(render(nodes, index_of, keep, k) for k in kids) + ")"


def valid_subtrees(root, max_nodes):
    nodes, parent = flatten(root)
    index_of = {id(n): i for i, n in enumerate(nodes)}
    found = set()
    seen = set()
    for r in range(len(nodes)):
        stack = [frozenset([r])]
        while stack:
            s = stack.pop()
            if s in seen:
                continue
            seen.add(s)
            ok = True
            for i in s:
                n = nodes[i]
                for c in n.children[:mandatory_count(n.kind, len(n.children))]:
                    if index_of[id(c)] not in s:
                        ok = False
            if ok:
                found.add(render(nodes, index_of, s, r))
            if len(s) < max_nodes:
                for i in s:
                    for c in nodes[i].children:
                        j = index_of[id(c)]
                        if j not in s:
                            stack.append(s | {j})
    return found


def size(canonical):
    return len(flatten(parse(canonical))[0])


def main():
    asts_path, max_nodes, min_support, catalog_out, features_out = sys.argv[1:]
    max_nodes, min_support = int(max_nodes), int(min_support)
    corpus = []
    with open(asts_path) as f:
        for line in f:
            if line.strip():
                qid, tree = line.rstrip("\n").split("\t")
                corpus.append((qid, parse(tree)))

    occurrences = {}
    for qid, tree in corpus:
        for pat in valid_subtrees(tree, max_nodes):
            occurrences.setdefault(pat, set()).add(qid)

    frequent = {p: ids for p, ids in occurrences.items() if len(ids) >= min_support}
    kept = []
    for p, ids in frequent.items():
        absorbed = False
        for q, other in frequent.items():
            if q == p or other != ids or size(q) <= size(p):
                continue
            if p in valid_subtrees(parse(q), size(p)):
                absorbed = True
                break
        if not absorbed:
            kept.append(p)
    kept.sort(key=lambda p: (size(p), p))

    with open(catalog_out, "w") as f:
        for p in kept:
            f.write("%s\t%s\n" % (p, ",".join(sorted(frequent[p]))))
    with open(features_out, "w") as f:
        for qid, tree in corpus:
            bits = []
            for p in kept:
                bits.append("1" if p in valid_subtrees(tree, size(p)) else "0")
            f.write("%s\t%s\n" % (qid, "".join(bits)))


if __name__ == "__main__":
    main()
