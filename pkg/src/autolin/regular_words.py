"""Deciding rigidity of the lexicographic order on a regular language.

Pipeline: the language's prefix tree is summarized as a system of
equations over subtree classes; solving the system yields a term built
from constants, concatenation, omega powers and shuffles; condensing the
term collapses intervals that are finite or label-dense into canonical
class descriptors; rigidity follows by recursion on the condensed term.

Order rigidity (as opposed to label-preserving rigidity) is decided by
erasing the leaf labels to a single constant before the recursion: an
order automorphism has no obligation to preserve letters.  At deeper
recursion levels the labels are class descriptors and must be preserved.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .automata import Nfa, minimize, _skey


class EpsilonInLanguage(ValueError):
    """The empty word is excluded by normalization; strip it first."""


class CondensationError(AssertionError):
    """A condensation step left the sequence unstable."""


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Const:
    label: object


@dataclass(frozen=True)
class Concat:
    parts: tuple

    def __post_init__(self):
        if len(self.parts) < 2:
            raise ValueError("concatenation needs at least two parts")


@dataclass(frozen=True)
class OmegaPow:
    arg: object


@dataclass(frozen=True)
class OmegaStarPow:
    arg: object


@dataclass(frozen=True)
class Shuffle:
    parts: tuple

    def __post_init__(self):
        parts = tuple(dict.fromkeys(self.parts))
        object.__setattr__(self, "parts", parts)
        if not parts:
            raise ValueError("shuffle needs at least one part")


def concat(parts):
    flat = []
    for p in parts:
        if isinstance(p, Concat):
            flat.extend(p.parts)
        elif p is not None:
            flat.append(p)
    if not flat:
        return None
    if len(flat) == 1:
        return flat[0]
    return Concat(tuple(flat))


def term_labels(t):
    if isinstance(t, Const):
        return {t.label}
    if isinstance(t, Concat):
        return set().union(*(term_labels(p) for p in t.parts))
    if isinstance(t, (OmegaPow, OmegaStarPow)):
        return term_labels(t.arg)
    if isinstance(t, Shuffle):
        return set().union(*(term_labels(p) for p in t.parts))
    raise TypeError("not a term: %r" % (t,))


def relabel_term(t, label="•"):
    """Erase all constants to one label (order-rigidity preprocessing)."""
    if isinstance(t, Const):
        return Const(label)
    if isinstance(t, Concat):
        return Concat(tuple(relabel_term(p, label) for p in t.parts))
    if isinstance(t, OmegaPow):
        return OmegaPow(relabel_term(t.arg, label))
    if isinstance(t, OmegaStarPow):
        return OmegaStarPow(relabel_term(t.arg, label))
    if isinstance(t, Shuffle):
        return Shuffle(tuple(relabel_term(p, label) for p in t.parts))
    raise TypeError("not a term: %r" % (t,))


def format_term(t):
    """Textual syntax: a, (t1 . t2), (t w), (t w*), [t1,...,tk]."""
    if isinstance(t, Const):
        return str(t.label)
    if isinstance(t, Concat):
        return "(%s)" % " . ".join(format_term(p) for p in t.parts)
    if isinstance(t, OmegaPow):
        return "(%s w)" % format_term(t.arg)
    if isinstance(t, OmegaStarPow):
        return "(%s w*)" % format_term(t.arg)
    if isinstance(t, Shuffle):
        return "[%s]" % ",".join(format_term(p) for p in t.parts)
    raise TypeError("not a term: %r" % (t,))


def parse_term(text):
    toks = _tokenize(text)
    term, rest = _parse(toks)
    if rest:
        raise ValueError("trailing input: %r" % (rest,))
    return term


def _tokenize(text):
    out = []
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
        elif c in "()[],.":
            out.append(c)
            i += 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "()[],.":
                j += 1
            out.append(text[i:j])
            i = j
    return out


def _parse(toks):
    if not toks:
        raise ValueError("unexpected end of term")
    tok, rest = toks[0], toks[1:]
    if tok == "(":
        first, rest = _parse(rest)
        parts = [first]
        while True:
            if not rest:
                raise ValueError("unterminated (")
            if rest[0] == ")":
                return concat(parts), rest[1:]
            if rest[0] == ".":
                nxt, rest = _parse(rest[1:])
                parts.append(nxt)
            elif rest[0] in ("w", "w*"):
                if len(parts) != 1:
                    raise ValueError("power applies to a single part")
                ctor = OmegaPow if rest[0] == "w" else OmegaStarPow
                if rest[1:2] != [")"]:
                    raise ValueError("expected ) after power")
                return ctor(parts[0]), rest[2:]
            else:
                raise ValueError("expected . or power, got %r" % rest[0])
    if tok == "[":
        parts = []
        while True:
            t, rest = _parse(rest)
            parts.append(t)
            if not rest:
                raise ValueError("unterminated [")
            if rest[0] == ",":
                rest = rest[1:]
                continue
            if rest[0] == "]":
                return Shuffle(tuple(parts)), rest[1:]
            raise ValueError("expected , or ] in shuffle")
    if tok in (")", "]", ",", ".", "w", "w*"):
        raise ValueError("unexpected token %r" % tok)
    return Const(tok), rest


# ---------------------------------------------------------------------------
# Equations from the prefix tree of a regular language


@dataclass(frozen=True)
class Label:
    """Right-hand side of a leaf equation."""

    label: object


@dataclass(frozen=True)
class EquationSystem:
    root: str
    equations: tuple  # of (variable, rhs) with rhs a var tuple or a Label

    def __post_init__(self):
        eqs = dict(self.equations)
        if self.root not in eqs:
            raise ValueError("root variable undefined")
        for var, rhs in eqs.items():
            if isinstance(rhs, Label):
                continue
            if len(rhs) < 2:
                raise ValueError("sequence equations need length >= 2 (%s)" % var)
            for v in rhs:
                if v not in eqs:
                    raise ValueError("undefined variable %r" % v)

    @property
    def mapping(self):
        return dict(self.equations)


def equations_from_regular_language(nfa):
    """Equation system of the prefix tree of L (leaves carry last letters).

    Subtrees are identified up to isomorphism via residual languages with
    the empty word discounted: two nodes with the same proper extensions
    generate identical subtrees.  Children of a node follow the letter
    order, with a letter's word-end leaf immediately before the subtree
    of that letter's proper extensions.
    """
    if nfa.accepts(()):
        raise EpsilonInLanguage("normalize the language to exclude the empty word")
    dfa = minimize(nfa)
    delta = {q: {s: next(iter(dfa._delta[q][s])) for s in dfa.alphabet} for q in dfa.states}
    # live(q): some word of length >= 1 is accepted from q
    live = set()
    changed = True
    while changed:
        changed = False
        for q in dfa.states:
            if q in live:
                continue
            for s in dfa.alphabet:
                if delta[q][s] in dfa.finals or delta[q][s] in live:
                    live.add(q)
                    changed = True
                    break
    # merge states equal on proper extensions: identical successor vectors
    groups = {}
    for q in sorted(dfa.states, key=_skey):
        sig = tuple(delta[q][s] for s in dfa.alphabet)
        groups.setdefault(sig, []).append(q)
    cls = {}
    for sig, qs in groups.items():
        rep = qs[0]
        for q in qs:
            cls[q] = rep

    names = {}
    leaf_names = {}
    equations = []

    def leaf_var(a):
        if a not in leaf_names:
            leaf_names[a] = "l%d" % (len(leaf_names) + 1)
            equations.append((leaf_names[a], Label(a)))
        return leaf_names[a]

    order = []
    root = cls[dfa.initial]
    todo = [root]
    names[root] = "x1"
    while todo:
        q = todo.pop(0)
        order.append(q)
        rhs = []
        for s in dfa.alphabet:
            nxt = delta[q][s]
            if nxt in dfa.finals:
                rhs.append(("leaf", s))
            if nxt in live:
                c = cls[nxt]
                if c not in names:
                    names[c] = "x%d" % (len(names) + 1)
                    todo.append(c)
                rhs.append(("var", c))
        equations.append((names[q], rhs))

    # resolve to variable names, collapse unary chains
    resolved = {}
    for var, rhs in equations:
        if isinstance(rhs, Label):
            resolved[var] = rhs
        else:
            resolved[var] = tuple(
                leaf_var(x) if kind == "leaf" else names[x] for (kind, x) in rhs
            )
    alias = {}
    for var, rhs in resolved.items():
        if not isinstance(rhs, Label) and len(rhs) == 1:
            alias[var] = rhs[0]

    def resolve(v):
        seen = set()
        while v in alias:
            if v in seen:
                raise CondensationError("alias cycle at %s" % v)
            seen.add(v)
            v = alias[v]
        return v

    final = []
    for var, rhs in resolved.items():
        if var in alias:
            continue
        if isinstance(rhs, Label):
            final.append((var, rhs))
        else:
            final.append((var, tuple(resolve(x) for x in rhs)))
    root_var = resolve("x1")
    keep = _reachable_equations(root_var, dict(final))
    return EquationSystem(root_var, tuple((v, r) for (v, r) in final if v in keep))


def _reachable_equations(root, eqs):
    seen = {root}
    todo = [root]
    while todo:
        v = todo.pop()
        rhs = eqs[v]
        if isinstance(rhs, Label):
            continue
        for w in rhs:
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return seen


# ---------------------------------------------------------------------------
# Solving (Heilbrunner scheme: SCC analysis of the equation graph)


def solve_equations(sys):
    eqs = sys.mapping
    sccs = _sccs(eqs)
    solved = {}
    for comp in sccs:  # already bottom-up
        comp = set(comp)
        recursive = any(
            not isinstance(eqs[v], Label) and any(w in comp for w in eqs[v])
            for v in comp
        )
        if not recursive:
            v = next(iter(comp))
            rhs = eqs[v]
            if isinstance(rhs, Label):
                solved[v] = Const(rhs.label)
            else:
                solved[v] = concat([solved[w] for w in rhs])
            continue
        _solve_scc(comp, eqs, solved)
    return solved[sys.root]


def _sccs(eqs):
    """Tarjan SCCs of the variable graph, in reverse topological order."""
    graph = {
        v: [w for w in rhs if not isinstance(rhs, Label)]
        if not isinstance(rhs, Label)
        else []
        for v, rhs in eqs.items()
    }
    index = {}
    low = {}
    onstack = set()
    stack = []
    out = []
    counter = itertools.count()

    def strongconnect(v):
        work = [(v, 0)]
        while work:
            node, pi = work[-1]
            if pi == 0:
                index[node] = low[node] = next(counter)
                stack.append(node)
                onstack.add(node)
            advanced = False
            for i in range(pi, len(graph[node])):
                w = graph[node][i]
                if w not in index:
                    work[-1] = (node, i + 1)
                    work.append((w, 0))
                    advanced = True
                    break
                if w in onstack:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    onstack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                out.append(comp)
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])

    for v in sorted(eqs, key=_skey):
        if v not in index:
            strongconnect(v)
    return out


def _split_rhs(rhs, comp, solved):
    """Segments of a right-hand side around its in-component variables.

    Returns (segments, occurrences): segments has one more entry than
    occurrences; each segment is a list of already-solved terms.
    """
    segments = [[]]
    occ = []
    for w in rhs:
        if w in comp:
            occ.append(w)
            segments.append([])
        else:
            segments[-1].append(solved[w])
    return segments, occ


def _solve_scc(comp, eqs, solved):
    occs = {}
    for v in comp:
        rhs = eqs[v]
        if isinstance(rhs, Label):
            raise CondensationError("label equation inside a recursive component")
        segments, occ = _split_rhs(rhs, comp, solved)
        occs[v] = (segments, occ)
    linear = all(len(occ) == 1 for (_segs, occ) in occs.values())
    if linear:
        for v in sorted(comp, key=_skey):
            solved[v] = _solve_linear(v, occs)
        return
    components = _shuffle_components(comp, occs)
    middle = Shuffle(tuple(components))
    for v in sorted(comp, key=_skey):
        left = _edge_terms(v, occs, side="left")
        right = _edge_terms(v, occs, side="right")
        solved[v] = concat(left + [middle] + right)


def _solve_linear(x, occs):
    """One in-component occurrence per equation: the expansion is a chain
    whose leading segments ascend and trailing segments descend, both
    eventually periodic."""
    path = []
    seen = {}
    z = x
    while z not in seen:
        seen[z] = len(path)
        segments, occ = occs[z]
        pre = concat(segments[0])
        post = concat(segments[1])
        path.append((pre, post))
        z = occ[0]
    j = seen[z]
    parts = [pre for (pre, _post) in path[:j] if pre is not None]
    cyc_pre = [pre for (pre, _post) in path[j:] if pre is not None]
    cyc_post = [post for (_pre, post) in path[j:] if post is not None]
    if cyc_pre:
        parts.append(OmegaPow(concat(cyc_pre)))
    if cyc_post:
        parts.append(OmegaStarPow(concat(list(reversed(cyc_post)))))
    parts.extend(post for (_pre, post) in reversed(path[:j]) if post is not None)
    term = concat(parts)
    if term is None:
        raise CondensationError("empty solution for %s (alias cycle?)" % x)
    return term


def _edge_terms(v, occs, side):
    """Material along the leftmost (rightmost) descent from v, as terms."""
    path = []
    seen = {}
    z = v
    while z not in seen:
        seen[z] = len(path)
        segments, occ = occs[z]
        if side == "left":
            path.append(concat(segments[0]))
            z = occ[0]
        else:
            path.append(concat(segments[-1]))
            z = occ[-1]
    j = seen[z]
    pre = [p for p in path[:j] if p is not None]
    cyc = [p for p in path[j:] if p is not None]
    if side == "left":
        out = list(pre)
        if cyc:
            out.append(OmegaPow(concat(cyc)))
        return out
    out = []
    if cyc:
        out.append(OmegaStarPow(concat(list(reversed(cyc)))))
    out.extend(reversed(pre))
    return out


def _shuffle_components(comp, occs):
    """Junction components: for each pair of adjacent in-component
    occurrences, the upper edge of the left one, the separating segment,
    and the lower edge of the right one."""
    components = []
    for v in sorted(comp, key=_skey):
        segments, occ = occs[v]
        for i in range(len(occ) - 1):
            upper = _edge_terms(occ[i], occs, side="right")
            sep = concat(segments[i + 1])
            lower = _edge_terms(occ[i + 1], occs, side="left")
            body = concat(upper + ([sep] if sep is not None else []) + lower)
            if body is not None:
                components.append(body)
    out = list(dict.fromkeys(components))
    if not out:
        raise CondensationError("dense component with no junction material")
    return out


# ---------------------------------------------------------------------------
# Term properties


@dataclass(frozen=True)
class TermProps:
    finite: bool
    has_min: bool
    has_max: bool
    dense: bool
    cardinality: object  # int or None when infinite


def term_props(t):
    """Compositional order facts: finiteness/cardinality, endpoints, and
    density (no two adjacent elements, infinitely many in total)."""
    if isinstance(t, Const):
        return TermProps(True, True, True, False, 1)
    if isinstance(t, Concat):
        ps = [term_props(p) for p in t.parts]
        finite = all(p.finite for p in ps)
        card = sum(p.cardinality for p in ps) if finite else None
        dense = not finite and all(p.dense or p.cardinality == 1 for p in ps)
        for a, b in zip(ps, ps[1:]):
            if a.has_max and b.has_min:
                dense = False
        return TermProps(finite, ps[0].has_min, ps[-1].has_max, dense, card)
    if isinstance(t, OmegaPow):
        p = term_props(t.arg)
        dense = (p.dense or p.cardinality == 1) and not (p.has_max and p.has_min)
        return TermProps(False, p.has_min, False, dense, None)
    if isinstance(t, OmegaStarPow):
        p = term_props(t.arg)
        dense = (p.dense or p.cardinality == 1) and not (p.has_max and p.has_min)
        return TermProps(False, False, p.has_max, dense, None)
    if isinstance(t, Shuffle):
        ps = [term_props(p) for p in t.parts]
        dense = all(p.dense or p.cardinality == 1 for p in ps)
        return TermProps(False, False, False, dense, None)
    raise TypeError("not a term: %r" % (t,))


# ---------------------------------------------------------------------------
# Class descriptors


@dataclass(frozen=True)
class Finite:
    labels: tuple  # the label word, length = cardinality >= 1


@dataclass(frozen=True)
class OmegaShape:
    prefix: tuple
    period: tuple  # nonempty


@dataclass(frozen=True)
class OmegaStarShape:
    period: tuple  # nonempty
    suffix: tuple


@dataclass(frozen=True)
class ZetaShape:
    left: tuple  # period of the descending side, nonempty
    middle: tuple
    right: tuple  # period of the ascending side, nonempty


@dataclass(frozen=True)
class DenseShape:
    labels: tuple  # sorted distinct labels occurring densely
    left: object = None  # endpoint label, when the class has a minimum
    right: object = None


CLASS_TYPES = (Finite, OmegaShape, OmegaStarShape, ZetaShape, DenseShape)


def _primitive_root(w):
    n = len(w)
    for d in range(1, n + 1):
        if n % d == 0 and tuple(w) == tuple(w[:d]) * (n // d):
            return tuple(w[:d])
    return tuple(w)


def _rot_left(w):
    return w[1:] + w[:1]


def _rot_right(w):
    return w[-1:] + w[:-1]


def _least_rotation(w):
    return min((w[i:] + w[:i] for i in range(len(w))), key=lambda x: tuple(map(_skey, x)))


def canonical_primitive(c):
    """Canonical representative of a class descriptor; idempotent.

    Periods become primitive roots; prefixes, suffixes and middles are
    shortened by absorbing letters into the periodic sides; the rotation
    of a pure-periodic two-sided class is fixed lexicographically (the
    only case where a rotation remains free).
    """
    if isinstance(c, Finite):
        return Finite(tuple(c.labels))
    if isinstance(c, OmegaShape):
        prefix, period = tuple(c.prefix), _primitive_root(c.period)
        while prefix and prefix[-1] == period[-1]:
            prefix = prefix[:-1]
            period = _rot_right(period)
        return OmegaShape(prefix, period)
    if isinstance(c, OmegaStarShape):
        period, suffix = _primitive_root(c.period), tuple(c.suffix)
        while suffix and suffix[0] == period[0]:
            suffix = suffix[1:]
            period = _rot_left(period)
        return OmegaStarShape(period, suffix)
    if isinstance(c, ZetaShape):
        left, mid, right = _primitive_root(c.left), tuple(c.middle), _primitive_root(c.right)
        changed = True
        while changed:
            changed = False
            if mid and mid[0] == left[0]:
                mid = mid[1:]
                left = _rot_left(left)
                changed = True
            if mid and mid[-1] == right[-1]:
                mid = mid[:-1]
                right = _rot_right(right)
                changed = True
        if not mid and left == right:
            r = _least_rotation(left)
            return ZetaShape(r, (), r)
        return ZetaShape(left, mid, right)
    if isinstance(c, DenseShape):
        labels = tuple(sorted(set(c.labels), key=_skey))
        return DenseShape(labels, c.left, c.right)
    raise TypeError("not a class descriptor: %r" % (c,))


def primitive_nonrigid(c):
    """Whether the class order admits a nontrivial label-preserving
    automorphism: dense classes always do; two-sided periodic classes do
    exactly when some shift maps the bi-infinite labeling onto itself."""
    c = canonical_primitive(c)
    if isinstance(c, (Finite, OmegaShape, OmegaStarShape)):
        return False
    if isinstance(c, DenseShape):
        return True
    if isinstance(c, ZetaShape):
        u, w, v = c.left, c.middle, c.right
        bound = len(u) * len(v) + len(w) + len(u) + len(v)
        margin = 2 * bound + len(w) + 4
        reps_l = margin // len(u) + 2
        reps_r = margin // len(v) + 2
        window = u * reps_l + w + v * reps_r
        for d in range(1, bound + 1):
            if all(window[i] == window[i + d] for i in range(len(window) - d)):
                return True
        return False
    raise TypeError("not a class descriptor: %r" % (c,))


# ---------------------------------------------------------------------------
# Condensation
#
# Condensed orders are handled as sequences of items: ("class", descriptor)
# plus structured items ("omega", seq), ("omegastar", seq) and
# ("shuffle", (seq, ...)).  Fusion acts on adjacent class items; the
# structured items never expose a boundary element, so nothing fuses
# through them.


def _cl(c):
    return ("class", c)


def _is_class(item):
    return item[0] == "class"


def _fuse(a, b):
    """Merge rule for adjacent classes; None when they stay separate, a
    list of one or two classes otherwise (two on endpoint absorption)."""
    if isinstance(a, Finite):
        if isinstance(b, Finite):
            return [Finite(a.labels + b.labels)]
        if isinstance(b, OmegaShape):
            return [OmegaShape(a.labels + b.prefix, b.period)]
        if isinstance(b, DenseShape) and b.left is None and a.labels[-1] in b.labels:
            head = a.labels[:-1]
            merged = DenseShape(b.labels, a.labels[-1], b.right)
            return ([Finite(head)] if head else []) + [merged]
        return None
    if isinstance(a, OmegaStarShape):
        if isinstance(b, Finite):
            return [OmegaStarShape(a.period, a.suffix + b.labels)]
        if isinstance(b, OmegaShape):
            return [ZetaShape(a.period, a.suffix + b.prefix, b.period)]
        if isinstance(b, DenseShape) and b.left is None:
            last = a.suffix[-1] if a.suffix else a.period[-1]
            if last not in b.labels:
                return None
            merged = DenseShape(b.labels, last, b.right)
            if a.suffix:
                return [OmegaStarShape(a.period, a.suffix[:-1]), merged]
            return [OmegaStarShape(_rot_right(a.period), ()), merged]
        return None
    if isinstance(a, DenseShape) and a.right is None:
        if isinstance(b, Finite):
            first = b.labels[0]
            if first not in a.labels:
                return None
            merged = DenseShape(a.labels, a.left, first)
            tail = b.labels[1:]
            return [merged] + ([Finite(tail)] if tail else [])
        if isinstance(b, OmegaShape):
            first = b.prefix[0] if b.prefix else b.period[0]
            if first not in a.labels:
                return None
            merged = DenseShape(a.labels, a.left, first)
            if b.prefix:
                return [merged, OmegaShape(b.prefix[1:], b.period)]
            return [merged, OmegaShape((), _rot_left(b.period))]
        if isinstance(b, DenseShape) and set(a.labels) == set(b.labels):
            return [DenseShape(a.labels, a.left, b.right)]
        return None
    if isinstance(a, DenseShape) and isinstance(b, DenseShape):
        if b.left is None and set(a.labels) == set(b.labels):
            return [DenseShape(a.labels, a.left, b.right)]
        return None
    return None


def _seq_normalize(items):
    out = []
    for it in items:
        out.append(it)
        while len(out) >= 2 and _is_class(out[-2]) and _is_class(out[-1]):
            res = _fuse(out[-2][1], out[-1][1])
            if res is None:
                break
            out[-2:] = [_cl(c) for c in res]
            if len(res) == 2:
                break
    return out


def _omega_close(K):
    K = list(K)
    if len(K) == 1 and _is_class(K[0]):
        c = K[0][1]
        if isinstance(c, Finite):
            return [_cl(OmegaShape((), c.labels))]
        if isinstance(c, DenseShape) and not (c.left is not None and c.right is not None):
            return [_cl(DenseShape(c.labels, c.left, None))]
        return [("omega", tuple(K))]
    if _is_class(K[0]) and _is_class(K[-1]):
        res = _fuse(K[-1][1], K[0][1])
        if res is not None:
            if len(res) == 1:
                unit = _seq_normalize([_cl(res[0])] + K[1:-1])
                head = K[:-1]
            else:
                c1, c2 = res
                unit = _seq_normalize([_cl(c2)] + K[1:-1] + [_cl(c1)])
                head = K[:-1] + [_cl(c1)]
            if len(unit) == 1:
                return _seq_normalize(head + _omega_close(unit))
            if _is_class(unit[0]) and _is_class(unit[-1]) and _fuse(unit[-1][1], unit[0][1]) is not None:
                raise CondensationError("cascading seam in omega power")
            return _seq_normalize(head + [("omega", tuple(unit))])
    return [("omega", tuple(K))]


def _omegastar_close(K):
    K = list(K)
    if len(K) == 1 and _is_class(K[0]):
        c = K[0][1]
        if isinstance(c, Finite):
            return [_cl(OmegaStarShape(c.labels, ()))]
        if isinstance(c, DenseShape) and not (c.left is not None and c.right is not None):
            return [_cl(DenseShape(c.labels, None, c.right))]
        return [("omegastar", tuple(K))]
    if _is_class(K[0]) and _is_class(K[-1]):
        res = _fuse(K[-1][1], K[0][1])
        if res is not None:
            if len(res) == 1:
                unit = _seq_normalize([_cl(res[0])] + K[1:-1])
                tail = K[1:]
            else:
                c1, c2 = res
                unit = _seq_normalize([_cl(c2)] + K[1:-1] + [_cl(c1)])
                tail = [_cl(c2)] + K[1:]
            if len(unit) == 1:
                return _seq_normalize(_omegastar_close(unit) + tail)
            if _is_class(unit[0]) and _is_class(unit[-1]) and _fuse(unit[-1][1], unit[0][1]) is not None:
                raise CondensationError("cascading seam in omega* power")
            return _seq_normalize([("omegastar", tuple(unit))] + tail)
    return [("omegastar", tuple(K))]


def _mergeable_shuffle(comps):
    """Blend test for a dense mixture: every component must be a single
    class that is a singleton or dense, and every dense component must
    already exhibit the full label set of the mixture in its interior."""
    labels = set()
    for K in comps:
        if len(K) != 1 or not _is_class(K[0]):
            return None
        c = K[0][1]
        if isinstance(c, Finite) and len(c.labels) == 1:
            labels.add(c.labels[0])
        elif isinstance(c, DenseShape):
            labels |= set(c.labels)
        else:
            return None
    for K in comps:
        c = K[0][1]
        if isinstance(c, DenseShape) and set(c.labels) != labels:
            return None
    return tuple(sorted(labels, key=_skey))


def _shuffle_close(comps):
    comps = [tuple(K) for K in comps if K]
    comps = list(dict.fromkeys(comps))
    if not comps:
        raise CondensationError("empty shuffle")
    labels = _mergeable_shuffle(comps)
    if labels is not None:
        return [_cl(DenseShape(labels, None, None))]
    return [("shuffle", tuple(comps))]


def _cond_seq(t):
    if isinstance(t, Const):
        return [_cl(Finite((t.label,)))]
    if isinstance(t, Concat):
        out = []
        for p in t.parts:
            out = _seq_normalize(out + _cond_seq(p))
        return out
    if isinstance(t, OmegaPow):
        return _omega_close(_cond_seq(t.arg))
    if isinstance(t, OmegaStarPow):
        return _omegastar_close(_cond_seq(t.arg))
    if isinstance(t, Shuffle):
        return _shuffle_close([_cond_seq(p) for p in t.parts])
    raise TypeError("not a term: %r" % (t,))


def _seq_classes(seq, out):
    for item in seq:
        if _is_class(item):
            c = canonical_primitive(item[1])
            if c not in out:
                out.append(c)
        elif item[0] in ("omega", "omegastar"):
            _seq_classes(item[1], out)
        elif item[0] == "shuffle":
            for K in item[1]:
                _seq_classes(K, out)
    return out


def _seq_to_term(seq):
    parts = []
    for item in seq:
        if _is_class(item):
            parts.append(Const(canonical_primitive(item[1])))
        elif item[0] == "omega":
            parts.append(OmegaPow(_seq_to_term(item[1])))
        elif item[0] == "omegastar":
            parts.append(OmegaStarPow(_seq_to_term(item[1])))
        elif item[0] == "shuffle":
            parts.append(Shuffle(tuple(_seq_to_term(K) for K in item[1])))
    return concat(parts)


def condense_term(t):
    """The condensation of the denoted order: a term over canonical class
    descriptors, plus the descriptors in order of first occurrence."""
    seq = _cond_seq(t)
    classes = _seq_classes(seq, [])
    return _seq_to_term(seq), classes


# ---------------------------------------------------------------------------
# Rigidity


MAX_CONDENSATION_DEPTH = 64


def is_rigid_term(t, trace=None):
    """Whether the denoted extended word admits only the identity
    automorphism.  Recursion: the order is nonrigid iff some condensation
    class is nonrigid or the condensed order is nonrigid."""
    cur = t
    for _depth in range(MAX_CONDENSATION_DEPTH):
        condensed, classes = condense_term(cur)
        if trace is not None:
            trace.append((cur, classes))
        if any(primitive_nonrigid(c) for c in classes):
            return False
        if isinstance(condensed, Const):
            return True
        if condensed == cur:
            raise CondensationError("condensation made no progress: %r" % (cur,))
        cur = condensed
    raise CondensationError("condensation depth exceeded")


def is_rigid_regular_lex(nfa, trace=None):
    """Rigidity of the lexicographic order on a regular language.

    Labels are erased to a single constant first: at the top level only
    the order matters, while the recursion inside is_rigid_term preserves
    the class-descriptor labels exactly.
    """
    system = equations_from_regular_language(nfa)
    term = solve_equations(system)
    return is_rigid_term(relabel_term(term), trace=trace)
