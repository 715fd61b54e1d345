"""Finite binary trees, bottom-up tree automata, tree convolution, the
order extending length-lexicographic comparison to trees, and the
delimiter tree family whose order is the descending chain of ascending
chains.

A tree is a finite partial map from {0,1}-strings to symbols whose domain
is prefix-closed and left-sibling-closed (u1 present forces u0).  Words
are the special trees with domain inside 0*.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

from .automata import PAD, LESS, EQUAL, GREATER, Alphabet, alphabet, as_word, _skey


class PrefixViolation(ValueError):
    def __init__(self, path):
        super().__init__("domain not prefix-closed at %r" % path)
        self.path = path


class LeftSiblingViolation(ValueError):
    def __init__(self, path):
        super().__init__("node %r present without its left sibling" % path)
        self.path = path


class ClosureViolation(ValueError):
    """Raised when an operation would break the domain closure conditions."""


@dataclass(frozen=True)
class Tree:
    """Immutable labeled binary tree; ``items`` is sorted (path, symbol)."""

    items: tuple

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(sorted(self.items)))

    @cached_property
    def _map(self):
        return dict(self.items)

    @cached_property
    def domain(self):
        return frozenset(p for (p, _s) in self.items)

    def label(self, path):
        return self._map[path]

    def get(self, path, default=None):
        return self._map.get(path, default)

    def __contains__(self, path):
        return path in self._map

    def __len__(self):
        return len(self.items)

    @property
    def is_empty(self):
        return not self.items

    def subtree(self, path):
        """The subtree rooted at ``path`` (empty when path is absent)."""
        n = len(path)
        return Tree(
            tuple(
                (p[n:], s)
                for (p, s) in self.items
                if p.startswith(path)
            )
        )

    @cached_property
    def main_branch(self):
        """Labels along the all-zero spine, as a word."""
        out = []
        p = ""
        while p in self._map:
            out.append(self._map[p])
            p += "0"
        return tuple(out)

    @cached_property
    def side_trees(self):
        """Subtrees hanging at 0^i·1 for every spine node 0^i."""
        out = []
        p = ""
        while p in self._map:
            out.append(self.subtree(p + "1"))
            p += "0"
        return tuple(out)

    def __repr__(self):
        if self.is_empty:
            return "Tree(∅)"
        return "Tree({%s})" % ", ".join("%s:%s" % (p or "ε", s) for p, s in self.items)


EMPTY_TREE = Tree(())


def validate_tree(entries):
    """Check both closure conditions and build the tree.

    ``entries`` is a mapping or iterable of (path, symbol) pairs; paths
    are strings over 0/1.
    """
    if hasattr(entries, "items"):
        entries = entries.items()
    items = tuple((str(p), s) for (p, s) in entries)
    dom = {p for (p, _s) in items}
    if len(dom) != len(items):
        raise ValueError("duplicate paths")
    for p in dom:
        if p and any(c not in "01" for c in p):
            raise ValueError("path %r is not a 0/1 string" % p)
    for p in sorted(dom, key=len):
        if p and p[:-1] not in dom:
            raise PrefixViolation(p)
        if p.endswith("1") and p[:-1] + "0" not in dom:
            raise LeftSiblingViolation(p)
    return Tree(items)


def tree_from_word(w, sigma_ignored=None):
    """The word ``w`` as a tree on the all-zero spine."""
    w = as_word(w)
    return Tree(tuple(("0" * i, s) for i, s in enumerate(w)))


def add_root(s, t, root_label="$"):
    """New tree with a fresh labeled root, ``s`` on the left, ``t`` right.

    The left-sibling closure at the root forbids an empty left subtree
    under a nonempty right one.
    """
    if s.is_empty and not t.is_empty:
        raise ClosureViolation("left subtree empty under a nonempty right subtree")
    items = [("", root_label)]
    items += [("0" + p, sym) for (p, sym) in s.items]
    items += [("1" + p, sym) for (p, sym) in t.items]
    return Tree(tuple(items))


def convolve_trees(ts):
    """Superpose trees into one over tuple labels, padding with #."""
    ts = tuple(ts)
    if not ts:
        raise ValueError("convolution needs at least one tree")
    dom = set()
    for t in ts:
        dom |= t.domain
    items = []
    for p in dom:
        items.append((p, tuple(t.get(p, PAD) for t in ts)))
    return Tree(tuple(items))


def deconvolve_tree(t, arity):
    """Split a tuple-labeled tree back into its component trees."""
    comps = []
    for i in range(arity):
        items = tuple((p, sym[i]) for (p, sym) in t.items if sym[i] != PAD)
        comps.append(Tree(items))
    return tuple(comps)


# ---------------------------------------------------------------------------
# The order on trees


def _cmp_words_llex(u, v, rank):
    if len(u) != len(v):
        return LESS if len(u) < len(v) else GREATER
    for a, b in zip(u, v):
        if a != b:
            return LESS if rank(a) < rank(b) else GREATER
    return EQUAL


def cmp_trees(s, t, sigma=None):
    """Total order: empty tree first, then main branches llex, then the
    first differing side tree, recursively."""
    if sigma is None:
        rank = _skey
    else:
        sigma = alphabet(sigma)
        rank = sigma.index
    return _cmp_trees(s, t, rank)


def _cmp_trees(s, t, rank):
    if s.is_empty or t.is_empty:
        if s.is_empty and t.is_empty:
            return EQUAL
        return LESS if s.is_empty else GREATER
    c = _cmp_words_llex(s.main_branch, t.main_branch, rank)
    if c != EQUAL:
        return c
    for ss, tt in zip(s.side_trees, t.side_trees):
        c = _cmp_trees(ss, tt, rank)
        if c != EQUAL:
            return c
    return EQUAL


# ---------------------------------------------------------------------------
# Bottom-up tree automata


@dataclass(frozen=True)
class TreeAutomaton:
    """Bottom-up tree automaton; transitions are (state, symbol, left, right).

    A run assigns a state to every node such that (state(u), label(u),
    state(u0), state(u1)) is a transition, with the initial state standing
    in for absent children.  Acceptance: the root's state is final.  The
    empty tree is accepted exactly when the initial state is final.
    """

    alphabet: Alphabet
    states: frozenset
    initial: object
    transitions: frozenset
    finals: frozenset

    def __post_init__(self):
        object.__setattr__(self, "states", frozenset(self.states))
        object.__setattr__(self, "transitions", frozenset(self.transitions))
        object.__setattr__(self, "finals", frozenset(self.finals))
        if self.initial not in self.states:
            raise ValueError("initial state not declared")
        if not self.finals <= self.states:
            raise ValueError("final states not declared")
        for (q, sym, l, r) in self.transitions:
            if {q, l, r} - set(self.states):
                raise ValueError("transition state not declared")
            if sym not in self.alphabet:
                raise ValueError("transition symbol %r not in alphabet" % (sym,))

    @cached_property
    def _by_symbol(self):
        d = {}
        for (q, sym, l, r) in self.transitions:
            d.setdefault(sym, []).append((q, l, r))
        return d

    def node_states(self, t):
        """Possible states per node, bottom-up over the powerset."""
        paths = sorted(t.domain, key=len, reverse=True)
        states = {}
        for p in paths:
            c0 = states.get(p + "0", None)
            c1 = states.get(p + "1", None)
            s0 = c0 if c0 is not None else {self.initial}
            s1 = c1 if c1 is not None else {self.initial}
            here = set()
            for (q, l, r) in self._by_symbol.get(t.label(p), ()):
                if l in s0 and r in s1:
                    here.add(q)
            states[p] = here
        return states

    def accepts(self, t):
        if t.is_empty:
            return self.initial in self.finals
        states = self.node_states(t)
        return bool(states[""] & self.finals)


def accepts_tree(ta, t):
    return ta.accepts(t)


# ---------------------------------------------------------------------------
# The delimiter family


def delimiter_tree(i, j):
    """The i,j member of the delimiter family, over the alphabet {$}.

    Domains, inductively: level 0 is {ε,0,00} plus a 1-rooted 0-chain of
    j+1 nodes; level i+1 is {ε,0,00} plus the previous tree grafted at 01.
    """
    dom = {"", "0", "00"} | {"1" + "0" * k for k in range(j + 1)}
    for _ in range(i):
        dom = {"", "0", "00"} | {"01" + p for p in dom}
    return Tree(tuple((p, "$") for p in dom))


def delimiter_alphabet():
    return Alphabet(("$",))


def delimiter_automaton():
    """Tree automaton accepting exactly the delimiter family.

    States: leaf (single node), two (the exact two-node spine {ε,0}),
    chain (nonempty 0-chains), mid (node with leaf left child and a
    delimiter right child), d (delimiter roots).
    """
    iota = "i"
    states = frozenset({iota, "leaf", "two", "chain", "mid", "d"})
    T = {
        ("leaf", "$", iota, iota),
        ("chain", "$", iota, iota),
        ("chain", "$", "chain", iota),
        ("two", "$", "leaf", iota),
        ("mid", "$", "leaf", "d"),
        ("d", "$", "two", "chain"),
        ("d", "$", "mid", iota),
    }
    return TreeAutomaton(delimiter_alphabet(), states, iota, frozenset(T), frozenset({"d"}))


def decode_delimiter_tree(t):
    """Recover (i, j) from a member of the delimiter family, else None."""
    i = 0
    cur = t
    while True:
        if cur.domain == {"", "0", "00"} | {p for p in cur.domain if p.startswith("1")}:
            tail = [p for p in cur.domain if p.startswith("1")]
            if tail and all(p == "1" + "0" * (len(p) - 1) for p in tail):
                return (i, len(tail) - 1)
        if "01" in cur.domain and cur.domain == {"", "0", "00"} | {
            p for p in cur.domain if p.startswith("01")
        }:
            cur = cur.subtree("01")
            i += 1
            continue
        return None


# ---------------------------------------------------------------------------
# Enumeration (test substrate)


def enumerate_domains(max_nodes):
    """All valid domains with at most ``max_nodes`` nodes (empty included)."""
    seen = {frozenset()}
    frontier = [frozenset()]
    out = [frozenset()]
    while frontier:
        dom = frontier.pop()
        if len(dom) >= max_nodes:
            continue
        # grow by one node keeping both closures
        candidates = set()
        if not dom:
            candidates.add("")
        for p in dom:
            if p + "0" not in dom:
                candidates.add(p + "0")
            elif p + "1" not in dom:
                candidates.add(p + "1")
        for c in candidates:
            nd = frozenset(dom | {c})
            if nd not in seen:
                seen.add(nd)
                out.append(nd)
                frontier.append(nd)
    return out


def enumerate_trees(sigma, max_nodes):
    """All trees with at most ``max_nodes`` nodes over ``sigma``."""
    sigma = alphabet(sigma)
    for dom in enumerate_domains(max_nodes):
        paths = sorted(dom)
        for labels in itertools.product(sigma.symbols, repeat=len(paths)):
            yield Tree(tuple(zip(paths, labels)))


def random_tree(rng, sigma, max_nodes):
    """A random valid tree with 0..max_nodes nodes (seeded rng)."""
    sigma = alphabet(sigma)
    n = rng.randrange(max_nodes + 1)
    dom = set()
    for _ in range(n):
        if not dom:
            dom.add("")
            continue
        grow = []
        for p in dom:
            if p + "0" not in dom:
                grow.append(p + "0")
            elif p + "1" not in dom:
                grow.append(p + "1")
        dom.add(rng.choice(sorted(grow)))
    return Tree(tuple((p, rng.choice(sigma.symbols)) for p in sorted(dom)))


# ---------------------------------------------------------------------------
# Serialization


def tree_to_json(t):
    """Canonical sorted list of [path, symbol] pairs."""
    from .automata import _sym_to_json

    return [[p, _sym_to_json(s)] for (p, s) in t.items]


def tree_from_json(obj):
    from .automata import _sym_from_json

    return validate_tree([(p, _sym_from_json(s)) for (p, s) in obj])


def tree_to_dot(t, name="tree"):
    lines = ["digraph %s {" % name]
    for (p, s) in t.items:
        lines.append('  "%s" [label="%s"];' % (p or "ε", s))
    for (p, _s) in t.items:
        if p:
            side = "l" if p.endswith("0") else "r"
            lines.append('  "%s" -> "%s" [label="%s"];' % (p[:-1] or "ε", p, side))
    lines.append("}")
    return "\n".join(lines)


def tree_automaton_to_json(ta):
    from .automata import _sym_to_json

    states = sorted(ta.states, key=_skey)
    names = {q: i for i, q in enumerate(states)}
    return {
        "alphabet": [_sym_to_json(s) for s in ta.alphabet.symbols],
        "states": sorted(names.values()),
        "initial": names[ta.initial],
        "finals": sorted(names[f] for f in ta.finals),
        "transitions": sorted(
            [names[q], _sym_to_json(sym), names[l], names[r]]
            for (q, sym, l, r) in ta.transitions
        ),
    }


def tree_automaton_from_json(obj):
    from .automata import _sym_from_json

    sigma = Alphabet(tuple(_sym_from_json(s) for s in obj["alphabet"]))
    return TreeAutomaton(
        sigma,
        frozenset(obj["states"]),
        obj["initial"],
        frozenset(
            (q, _sym_from_json(sym), l, r) for (q, sym, l, r) in obj["transitions"]
        ),
        frozenset(obj["finals"]),
    )
