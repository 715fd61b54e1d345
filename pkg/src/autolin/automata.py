"""Word automata over ordered alphabets: the substrate for every
word-level construction in this package.

Conventions:

* A word is a tuple of symbols; plain strings are accepted by most entry
  points and are split into single-character symbols.
* Symbols are hashable values, usually strings; convolution tracks use
  tuples of symbols.  The padding symbol ``#`` is reserved and never a
  member symbol of an alphabet.
* NFAs have a single initial state and no epsilon transitions (run
  counting would be ill-defined with epsilon cycles), and all values are
  immutable after construction.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

PAD = "#"

LESS, EQUAL, GREATER = -1, 0, 1


class AlphabetMismatch(ValueError):
    """Raised when an operation mixes automata over different alphabets."""


class DeconvolutionError(ValueError):
    """Raised when a convolution word has a resumed track after padding."""


def as_word(w):
    """Coerce ``w`` (string or iterable of symbols) to a symbol tuple."""
    if isinstance(w, str):
        return tuple(w)
    return tuple(w)


def word_str(w):
    """Render a word compactly; falls back to tuple repr on non-char symbols."""
    if all(isinstance(s, str) and len(s) == 1 for s in w):
        return "".join(w) if w else "ε"
    return repr(tuple(w))


@dataclass(frozen=True)
class Alphabet:
    """A finite, totally ordered set of symbols (order = position)."""

    symbols: tuple

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("alphabet symbols must be pairwise distinct")
        if PAD in self.symbols:
            raise ValueError("padding symbol %r is reserved" % PAD)

    @cached_property
    def _index(self):
        return {s: i for i, s in enumerate(self.symbols)}

    def index(self, sym):
        return self._index[sym]

    def __contains__(self, sym):
        return sym in self._index

    def __iter__(self):
        return iter(self.symbols)

    def __len__(self):
        return len(self.symbols)

    def cmp(self, a, b):
        ia, ib = self._index[a], self._index[b]
        return LESS if ia < ib else (GREATER if ia > ib else EQUAL)


def alphabet(spec):
    """Build an :class:`Alphabet` from a string or an iterable of symbols."""
    if isinstance(spec, Alphabet):
        return spec
    if isinstance(spec, str):
        return Alphabet(tuple(spec))
    return Alphabet(tuple(spec))


def conv_alphabet(base, arity):
    """The convolution alphabet: ``arity``-tuples over base ∪ {#}, minus all-#.

    Tuples are ordered by per-slot base rank with ``#`` below every symbol,
    which keeps the order deterministic; no comparator relies on it.
    """
    base = alphabet(base)

    def rank(s):
        return -1 if s == PAD else base.index(s)

    syms = [
        t
        for t in itertools.product((PAD,) + tuple(base.symbols), repeat=arity)
        if any(s != PAD for s in t)
    ]
    syms.sort(key=lambda t: tuple(rank(s) for s in t))
    return Alphabet(tuple(syms))


@dataclass(frozen=True)
class Nfa:
    """Nondeterministic finite automaton with one initial state.

    ``transitions`` is a frozenset of ``(src, symbol, dst)`` triples.
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
        for (src, sym, dst) in self.transitions:
            if src not in self.states or dst not in self.states:
                raise ValueError("transition endpoint not declared")
            if sym not in self.alphabet:
                raise ValueError("transition symbol %r not in alphabet" % (sym,))

    @cached_property
    def _delta(self):
        d = {}
        for (src, sym, dst) in self.transitions:
            d.setdefault(src, {}).setdefault(sym, set()).add(dst)
        return d

    @cached_property
    def _rdelta(self):
        d = {}
        for (src, sym, dst) in self.transitions:
            d.setdefault(dst, {}).setdefault(sym, set()).add(src)
        return d

    def out_edges(self, state):
        return self._delta.get(state, {})

    def step(self, stateset, sym):
        nxt = set()
        for q in stateset:
            nxt |= self._delta.get(q, {}).get(sym, set())
        return nxt

    def accepts(self, w):
        current = {self.initial}
        for sym in as_word(w):
            current = self.step(current, sym)
            if not current:
                return False
        return bool(current & self.finals)

    @cached_property
    def reachable(self):
        seen = {self.initial}
        todo = [self.initial]
        while todo:
            q = todo.pop()
            for dsts in self._delta.get(q, {}).values():
                for p in dsts:
                    if p not in seen:
                        seen.add(p)
                        todo.append(p)
        return frozenset(seen)

    @cached_property
    def coaccessible(self):
        seen = set(self.finals)
        todo = list(self.finals)
        while todo:
            q = todo.pop()
            for srcs in self._rdelta.get(q, {}).values():
                for p in srcs:
                    if p not in seen:
                        seen.add(p)
                        todo.append(p)
        return frozenset(seen)

    def trim(self):
        """Restrict to reachable and co-accessible states.

        Returns None when the language is empty (the initial state itself
        would be removed otherwise).
        """
        live = self.reachable & self.coaccessible
        if self.initial not in live:
            return None
        return Nfa(
            self.alphabet,
            live,
            self.initial,
            frozenset(t for t in self.transitions if t[0] in live and t[2] in live),
            self.finals & live,
        )

    def has_cycle(self):
        """Cycle detection on the transition graph (states as given)."""
        WHITE, GREY, BLACK = 0, 1, 2
        color = {q: WHITE for q in self.states}
        for root in self.states:
            if color[root] != WHITE:
                continue
            stack = [(root, iter(self._successors(root)))]
            color[root] = GREY
            while stack:
                q, it = stack[-1]
                found = False
                for p in it:
                    if color[p] == GREY:
                        return True
                    if color[p] == WHITE:
                        color[p] = GREY
                        stack.append((p, iter(self._successors(p))))
                        found = True
                        break
                if not found:
                    color[q] = BLACK
                    stack.pop()
        return False

    def _successors(self, q):
        out = set()
        for dsts in self._delta.get(q, {}).values():
            out |= dsts
        return sorted(out, key=_skey)

    def reverse(self):
        """Automaton for the reversed language (fresh initial state)."""
        init = ("rev", 0)
        states = {("s", q) for q in self.states} | {init}
        trans = {(("s", d), s, ("s", src)) for (src, s, d) in self.transitions}
        for f in self.finals:
            for (src, s, d) in self.transitions:
                if d == f:
                    trans.add((init, s, ("s", src)))
        finals = {("s", self.initial)}
        if self.initial in self.finals:
            finals.add(init)
        return Nfa(self.alphabet, frozenset(states), init, frozenset(trans), frozenset(finals))

    def relabel(self):
        """Canonical relabeling of states to 0..n-1 in BFS order."""
        order = [self.initial]
        seen = {self.initial}
        i = 0
        while i < len(order):
            q = order[i]
            i += 1
            for sym in self.alphabet:
                for p in sorted(self._delta.get(q, {}).get(sym, ()), key=_skey):
                    if p not in seen:
                        seen.add(p)
                        order.append(p)
        for q in sorted(self.states - seen, key=_skey):
            order.append(q)
        names = {q: i for i, q in enumerate(order)}
        return Nfa(
            self.alphabet,
            frozenset(names.values()),
            names[self.initial],
            frozenset((names[a], s, names[b]) for (a, s, b) in self.transitions),
            frozenset(names[f] for f in self.finals),
        )


def _skey(x):
    """Total sort key over heterogeneous hashable state/symbol values."""
    return (x.__class__.__name__, repr(x))


# ---------------------------------------------------------------------------
# Constructors


def literal_nfa(sigma, w):
    """Automaton accepting exactly the single word ``w``."""
    sigma = alphabet(sigma)
    w = as_word(w)
    states = frozenset(range(len(w) + 1))
    trans = frozenset((i, s, i + 1) for i, s in enumerate(w))
    return Nfa(sigma, states, 0, trans, frozenset({len(w)}))


def finite_language_nfa(sigma, words):
    """Automaton for a finite set of words (prefix-tree shaped)."""
    sigma = alphabet(sigma)
    states = {()}
    finals = set()
    trans = set()
    for w in map(as_word, words):
        for i, s in enumerate(w):
            src, dst = w[:i], w[: i + 1]
            states.add(dst)
            trans.add((src, s, dst))
        finals.add(w)
    return Nfa(sigma, frozenset(states), (), frozenset(trans), frozenset(finals)).relabel()


def _tagged(nfa, tag):
    return Nfa(
        nfa.alphabet,
        frozenset((tag, q) for q in nfa.states),
        (tag, nfa.initial),
        frozenset(((tag, a), s, (tag, b)) for (a, s, b) in nfa.transitions),
        frozenset((tag, f) for f in nfa.finals),
    )


def union_nfa(a, b):
    """Epsilon-free union via a fresh initial state."""
    if a.alphabet != b.alphabet:
        raise AlphabetMismatch("union over different alphabets")
    ta, tb = _tagged(a, "a"), _tagged(b, "b")
    init = ("u", 0)
    states = ta.states | tb.states | {init}
    trans = set(ta.transitions) | set(tb.transitions)
    for part in (ta, tb):
        for (src, s, dst) in part.transitions:
            if src == part.initial:
                trans.add((init, s, dst))
    finals = set(ta.finals) | set(tb.finals)
    if a.initial in a.finals or b.initial in b.finals:
        finals.add(init)
    return Nfa(a.alphabet, frozenset(states), init, frozenset(trans), frozenset(finals))


def concat_nfa(a, b):
    """Epsilon-free concatenation."""
    if a.alphabet != b.alphabet:
        raise AlphabetMismatch("concatenation over different alphabets")
    ta, tb = _tagged(a, "a"), _tagged(b, "b")
    states = ta.states | tb.states
    trans = set(ta.transitions) | set(tb.transitions)
    # Finishing a word of `a` jumps into b's initial state.
    for (src, s, dst) in ta.transitions:
        if dst in ta.finals:
            trans.add((src, s, tb.initial))
    # If epsilon is in L(a), b starts directly from a's initial state.
    if a.initial in a.finals:
        for (src, s, dst) in tb.transitions:
            if src == tb.initial:
                trans.add((ta.initial, s, dst))
    finals = set(tb.finals)
    if b.initial in b.finals:
        finals |= ta.finals
        if a.initial in a.finals:
            finals.add(ta.initial)
    return Nfa(a.alphabet, frozenset(states), ta.initial, frozenset(trans), frozenset(finals))


def plus_nfa(a):
    """Automaton for L(a)+ (one or more concatenated words)."""
    trans = set(a.transitions)
    for (src, s, dst) in a.transitions:
        if dst in a.finals:
            trans.add((src, s, a.initial))
    return Nfa(a.alphabet, a.states, a.initial, frozenset(trans), a.finals)


def star_nfa(a):
    """Automaton for L(a)*; adds the empty word via a fresh initial state."""
    p = _tagged(plus_nfa(a), "p")
    init = ("s", 0)
    trans = set(p.transitions)
    for (src, s, dst) in p.transitions:
        if src == p.initial:
            trans.add((init, s, dst))
    return Nfa(
        p.alphabet,
        p.states | {init},
        init,
        frozenset(trans),
        p.finals | {init},
    )


# ---------------------------------------------------------------------------
# Determinization and boolean operations


def determinize(nfa, complete=True):
    """Subset construction.  With ``complete=True`` the result is a total
    DFA over the alphabet (an explicit empty-set sink is added)."""
    start = frozenset({nfa.initial})
    seen = {start}
    todo = [start]
    trans = set()
    while todo:
        S = todo.pop()
        for sym in nfa.alphabet:
            T = frozenset(nfa.step(S, sym))
            if not T and not complete:
                continue
            trans.add((S, sym, T))
            if T not in seen:
                seen.add(T)
                todo.append(T)
    finals = frozenset(S for S in seen if S & nfa.finals)
    return Nfa(nfa.alphabet, frozenset(seen), start, frozenset(trans), finals)


def complement(nfa):
    det = determinize(nfa, complete=True)
    return Nfa(det.alphabet, det.states, det.initial, det.transitions, det.states - det.finals)


def intersect(a, b):
    if a.alphabet != b.alphabet:
        raise AlphabetMismatch("intersection over different alphabets")
    init = (a.initial, b.initial)
    seen = {init}
    todo = [init]
    trans = set()
    while todo:
        (p, q) = todo.pop()
        pa = a._delta.get(p, {})
        qb = b._delta.get(q, {})
        for sym in set(pa) & set(qb):
            for p2 in pa[sym]:
                for q2 in qb[sym]:
                    trans.add(((p, q), sym, (p2, q2)))
                    if (p2, q2) not in seen:
                        seen.add((p2, q2))
                        todo.append((p2, q2))
    finals = frozenset(s for s in seen if s[0] in a.finals and s[1] in b.finals)
    return Nfa(a.alphabet, frozenset(seen), init, frozenset(trans), finals)


def difference(a, b):
    return intersect(a, complement(b))


def boolean_ops(a, b, op):
    """Set-theoretic combination of the two languages."""
    if a.alphabet != b.alphabet:
        raise AlphabetMismatch("boolean operation over different alphabets")
    if op == "union":
        return union_nfa(a, b)
    if op == "intersection":
        return intersect(a, b)
    if op == "difference":
        return difference(a, b)
    raise ValueError("unknown boolean operation %r" % (op,))


def minimize(nfa):
    """Minimal complete DFA (Moore partition refinement)."""
    det = determinize(nfa, complete=True)
    states = sorted(det.states, key=_skey)
    delta = {q: {s: next(iter(det._delta[q][s])) for s in det.alphabet} for q in states}
    block = {q: (q in det.finals) for q in states}
    while True:
        sig = {
            q: (block[q], tuple(block[delta[q][s]] for s in det.alphabet))
            for q in states
        }
        classes = {}
        for q in states:
            classes.setdefault(sig[q], len(classes))
        new = {q: classes[sig[q]] for q in states}
        if len(set(new.values())) == len(set(block.values())):
            block = new
            break
        block = new
    trans = frozenset((block[q], s, block[delta[q][s]]) for q in states for s in det.alphabet)
    return Nfa(
        det.alphabet,
        frozenset(block.values()),
        block[det.initial],
        trans,
        frozenset(block[f] for f in det.finals),
    )


def is_empty(nfa):
    return nfa.trim() is None


def some_word(nfa):
    """A shortest accepted word by plain state BFS.

    Cheaper than :func:`shortest_word` (no subset construction) but not
    llex-least among words of equal length; use for emptiness witnesses.
    """
    if nfa.initial in nfa.finals:
        return ()
    parent = {nfa.initial: None}
    frontier = [nfa.initial]
    while frontier:
        nxt = []
        for q in frontier:
            for sym, dsts in nfa._delta.get(q, {}).items():
                for p in dsts:
                    if p in parent:
                        continue
                    parent[p] = (q, sym)
                    if p in nfa.finals:
                        out = []
                        cur = p
                        while parent[cur] is not None:
                            pq, ps = parent[cur]
                            out.append(ps)
                            cur = pq
                        return tuple(reversed(out))
                    nxt.append(p)
        frontier = nxt
    return None


def shortest_word(nfa, nonempty=False):
    """A length-lexicographically least accepted word, or None.

    With ``nonempty=True`` the empty word is excluded from consideration.
    """
    start = frozenset({nfa.initial})
    if not nonempty and start & nfa.finals:
        return ()
    seen = {start}
    frontier = [(start, ())]
    while frontier:
        nxt = []
        for (S, w) in frontier:
            for sym in nfa.alphabet:
                T = frozenset(nfa.step(S, sym))
                if not T:
                    continue
                if T & nfa.finals:
                    return w + (sym,)
                if T not in seen:
                    seen.add(T)
                    nxt.append((T, w + (sym,)))
        frontier = nxt
    return None


# ---------------------------------------------------------------------------
# Enumeration and run counting


def iter_language(nfa, max_len=None):
    """Yield the members of L(nfa) in strictly increasing llex order.

    Terminates by itself on finite languages; pass ``max_len`` to bound
    the stream on infinite ones.
    """
    trimmed = nfa.trim()
    if trimmed is None:
        return
    finite_bound = None if trimmed.has_cycle() else len(trimmed.states)
    layers = [set(trimmed.finals)]

    def reach(r):
        while len(layers) <= r:
            last = layers[-1]
            layers.append({src for (src, _s, dst) in trimmed.transitions if dst in last})
        return layers[r]

    syms = trimmed.alphabet.symbols
    length = 0
    while True:
        if max_len is not None and length > max_len:
            return
        if finite_bound is not None and length > finite_bound:
            return

        def dfs(S, rem, prefix):
            if rem == 0:
                if S & trimmed.finals:
                    yield prefix
                return
            for sym in syms:
                T = trimmed.step(S, sym) & reach(rem - 1)
                if T:
                    yield from dfs(T, rem - 1, prefix + (sym,))

        if {trimmed.initial} & reach(length):
            yield from dfs({trimmed.initial}, length, ())
        length += 1


def enumerate_language(nfa, limit, order="llex", max_len=None):
    """First ``limit`` members of the language in llex order."""
    if order != "llex":
        raise ValueError("only llex enumeration is well-founded")
    return list(itertools.islice(iter_language(nfa, max_len=max_len), limit))


def language_upto(nfa, max_len):
    """All members of length at most ``max_len``, in llex order."""
    return list(iter_language(nfa, max_len=max_len))


def count_accepting_runs(nfa, w):
    """Exact number of accepting runs on ``w`` (0 when rejected).

    Dynamic programming over positions; counts are unbounded ints.
    """
    counts = {nfa.initial: 1}
    for sym in as_word(w):
        nxt = {}
        for q, c in counts.items():
            for p in nfa._delta.get(q, {}).get(sym, ()):
                nxt[p] = nxt.get(p, 0) + c
        counts = nxt
        if not counts:
            return 0
    return sum(c for q, c in counts.items() if q in nfa.finals)


def enumerate_runs_brute(nfa, w):
    """All accepting runs on ``w`` as state sequences (oracle for counting)."""
    w = as_word(w)
    runs = []

    def go(q, i, acc):
        if i == len(w):
            if q in nfa.finals:
                runs.append(tuple(acc))
            return
        for p in sorted(nfa._delta.get(q, {}).get(w[i], ()), key=_skey):
            go(p, i + 1, acc + [p])

    go(nfa.initial, 0, [nfa.initial])
    return runs


# ---------------------------------------------------------------------------
# Convolution


@dataclass(frozen=True)
class ConvWord:
    """Convolution of n words: tracks of possibly different lengths."""

    tracks: tuple

    def __post_init__(self):
        object.__setattr__(self, "tracks", tuple(as_word(t) for t in self.tracks))
        if not self.tracks:
            raise ValueError("convolution needs at least one track")

    @property
    def arity(self):
        return len(self.tracks)

    def __len__(self):
        return max(len(t) for t in self.tracks)

    @property
    def symbols(self):
        """The convolution as a word over tuple symbols, with # padding."""
        n = len(self)
        out = []
        for i in range(n):
            out.append(tuple(t[i] if i < len(t) else PAD for t in self.tracks))
        return tuple(out)


def convolve(ws):
    return ConvWord(tuple(as_word(w) for w in ws))


def deconvolve(symbols):
    """Inverse of ``ConvWord.symbols``; rejects tracks resuming after #."""
    symbols = tuple(symbols)
    if not symbols:
        raise DeconvolutionError("empty convolution has unknown arity")
    arity = len(symbols[0])
    tracks = [[] for _ in range(arity)]
    ended = [False] * arity
    for pos, sym in enumerate(symbols):
        if len(sym) != arity:
            raise DeconvolutionError("mixed arity at position %d" % pos)
        for t in range(arity):
            if sym[t] == PAD:
                ended[t] = True
            else:
                if ended[t]:
                    raise DeconvolutionError(
                        "track %d resumes after padding at position %d" % (t, pos)
                    )
                tracks[t].append(sym[t])
    return tuple(tuple(t) for t in tracks)


# ---------------------------------------------------------------------------
# Serialization


def _sym_to_json(sym):
    if isinstance(sym, tuple):
        return [_sym_to_json(s) for s in sym]
    return sym


def _sym_from_json(obj):
    if isinstance(obj, list):
        return tuple(_sym_from_json(s) for s in obj)
    return obj


def nfa_to_json(nfa):
    """JSON-able dict: {alphabet, states, initial, finals, transitions}."""
    n = nfa.relabel()
    return {
        "alphabet": [_sym_to_json(s) for s in n.alphabet.symbols],
        "states": sorted(n.states),
        "initial": n.initial,
        "finals": sorted(n.finals),
        "transitions": sorted(
            [src, _sym_to_json(sym), dst] for (src, sym, dst) in n.transitions
        ),
    }


def nfa_from_json(obj):
    sigma = Alphabet(tuple(_sym_from_json(s) for s in obj["alphabet"]))
    return Nfa(
        sigma,
        frozenset(obj["states"]),
        obj["initial"],
        frozenset((src, _sym_from_json(sym), dst) for (src, sym, dst) in obj["transitions"]),
        frozenset(obj["finals"]),
    )


def nfa_to_dot(nfa, name="nfa"):
    n = nfa.relabel()
    lines = ["digraph %s {" % name, "  rankdir=LR;", '  "" [shape=none];']
    for q in sorted(n.states):
        shape = "doublecircle" if q in n.finals else "circle"
        lines.append('  "%s" [shape=%s];' % (q, shape))
    lines.append('  "" -> "%s";' % n.initial)
    for (src, sym, dst) in sorted(n.transitions, key=lambda t: (t[0], _skey(t[1]), t[2])):
        lines.append('  "%s" -> "%s" [label="%s"];' % (src, dst, sym))
    lines.append("}")
    return "\n".join(lines)
