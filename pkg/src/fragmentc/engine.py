"""Executable parser for composed languages.

The engine interprets a ``ComposedLanguage`` directly: memoized recursive
descent with ordered choice over a modally-lexed token stream. Lexing is
modal because keyword sets are scoped per contributing fragment; the active
fragment switches at production boundaries, so a filler's keywords are plain
identifiers to the host and vice versa.
"""
from __future__ import annotations

import bisect
import re
from dataclasses import dataclass, field
from enum import Enum

from .compose import ComposedLanguage
from .errors import EngineBuildError
from .grammar.model import (
    IDENT_TOKEN,
    Alternative,
    Block,
    BodyExpr,
    Cardinality,
    CardinalityKind,
    NonterminalRef,
    PresenceFlag,
    Production,
    Sequence,
    Terminal,
    iter_body,
    referenced_nonterminals,
)
from .reports import ProblemReport, Span, error, warning

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


class TokenKind(str, Enum):
    KEYWORD = "keyword"
    IDENT = "ident"
    SYMBOL = "symbol"
    COMMENT_LINE = "comment-line"
    COMMENT_BLOCK = "comment-block"
    WHITESPACE = "whitespace"
    ERROR_CHAR = "error-char"


COMMENT_KINDS = (TokenKind.COMMENT_LINE, TokenKind.COMMENT_BLOCK)
WORD_KINDS = (TokenKind.KEYWORD, TokenKind.IDENT, TokenKind.SYMBOL)


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    span: Span
    offset: int = field(default=0, compare=False)
    cls: str | None = field(default=None, compare=False)  # custom token rule name

    @property
    def end_offset(self) -> int:
        return self.offset + len(self.text)


@dataclass(frozen=True)
class SyntaxNode:
    """Generic runtime-typed tree node carrying production attributes."""

    production: str  # qualified Fragment.Name
    attributes: dict
    children: tuple["SyntaxNode", ...]
    span: Span = field(compare=False)
    own_tokens: tuple[Token, ...] = field(default=(), compare=False, repr=False)

    @property
    def fragment(self) -> str:
        return self.production.split(".", 1)[0]

    def attr(self, name: str, default=None):
        return self.attributes.get(name, default)

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()

    def leaf_tokens(self) -> list[Token]:
        leaves = list(self.own_tokens)
        for child in self.children:
            leaves.extend(child.leaf_tokens())
        leaves.sort(key=lambda t: t.offset)
        return leaves


@dataclass(frozen=True)
class ParseOutcome:
    root: SyntaxNode | None
    tokens: tuple[Token, ...]
    problems: tuple[ProblemReport, ...]

    def ok(self) -> bool:
        return self.root is not None


class _LineMap:
    def __init__(self, text: str):
        self.text = text
        self.starts = [0]
        for i, ch in enumerate(text):
            if ch == "\n":
                self.starts.append(i + 1)

    def linecol(self, offset: int) -> tuple[int, int]:
        line = bisect.bisect_right(self.starts, offset) - 1
        return line + 1, offset - self.starts[line] + 1

    def span(self, start: int, end: int) -> Span:
        sl, sc = self.linecol(start)
        el, ec = self.linecol(end)
        return Span(sl, sc, el, ec)


@dataclass(frozen=True)
class _Mode:
    fragment: str
    keywords: frozenset[str]
    symbols: tuple[str, ...]  # longest first
    token_rules: tuple[tuple[str, re.Pattern], ...]


@dataclass
class _FirstSet:
    """What may appear at a position: terminal texts, IDENT, token classes."""

    texts: set[str] = field(default_factory=set)
    ident: bool = False
    classes: set[str] = field(default_factory=set)

    def matches(self, tok: Token) -> bool:
        if tok.kind is TokenKind.ERROR_CHAR:
            return False
        if tok.cls is not None:
            return tok.cls in self.classes or tok.text in self.texts
        if tok.kind is TokenKind.IDENT and self.ident:
            return True
        return tok.text in self.texts


_LIST = "list"
_SCALAR = "scalar"
_OPTIONAL = "optional"
_BOOL = "bool"


class ParserHandle:
    """Immutable, reusable recognizer for one composed language."""

    def __init__(self, lang: ComposedLanguage):
        self.lang = lang
        self.warnings: list[ProblemReport] = []
        self.modes = self._build_modes()
        self.host_fragment = lang.fragment_of(lang.start_symbol)
        self.label_plans = {q: _plan_labels(p) for q, p in lang.productions.items()}
        self.nullable = self._compute_nullable()
        self._check_left_recursion()
        self._check_reachability()
        self.recovery_stops = self._recovery_stops()

    # -- build-time analyses ------------------------------------------------

    def _build_modes(self) -> dict[str, _Mode]:
        per_fragment_terms: dict[str, set[str]] = {}
        for qname, prod in self.lang.productions.items():
            frag = self.lang.fragment_of(qname)
            terms = per_fragment_terms.setdefault(frag, set())
            for node in iter_body(prod.body):
                if isinstance(node, Terminal):
                    terms.add(node.text)
                elif isinstance(node, PresenceFlag):
                    terms.add(node.keyword)
        modes: dict[str, _Mode] = {}
        fragments = set(per_fragment_terms) | set(self.lang.fragment_keywords)
        for frag in fragments:
            symbols = tuple(sorted(
                (t for t in per_fragment_terms.get(frag, ()) if not IDENT_RE.fullmatch(t)),
                key=len, reverse=True,
            ))
            rules = []
            for qname, tok in self.lang.token_productions.items():
                if self.lang.fragment_of(qname) != frag:
                    continue
                try:
                    rules.append((qname, re.compile(tok.pattern)))
                except re.error as exc:
                    raise EngineBuildError([error(
                        f"token {qname!r} has an invalid pattern: {exc}", self.lang.name,
                        source="engine")]) from exc
            modes[frag] = _Mode(
                fragment=frag,
                keywords=self.lang.fragment_keywords.get(frag, frozenset()),
                symbols=symbols,
                token_rules=tuple(rules),
            )
        return modes

    def mode(self, fragment: str) -> _Mode:
        if fragment not in self.modes:
            raise KeyError(f"unknown fragment {fragment!r}")
        return self.modes[fragment]

    def _compute_nullable(self) -> dict[str, bool]:
        nullable = {q: False for q in self.lang.productions}

        def expr_nullable(expr: BodyExpr) -> bool:
            if isinstance(expr, (Terminal, PresenceFlag)):
                return False
            if isinstance(expr, NonterminalRef):
                t = expr.target
                if t == IDENT_TOKEN or t in self.lang.token_productions:
                    return False
                if t in self.lang.interfaces:
                    return any(nullable.get(i, False) for i in self.lang.interface_impls.get(t, ()))
                return nullable.get(t, False)
            if isinstance(expr, Sequence):
                return all(expr_nullable(i) for i in expr.items)
            if isinstance(expr, Alternative):
                return any(expr_nullable(b) for b in expr.branches)
            if isinstance(expr, Block):
                return expr_nullable(expr.inner)
            if isinstance(expr, Cardinality):
                if expr.kind in (CardinalityKind.OPTIONAL, CardinalityKind.STAR):
                    return True
                return expr_nullable(expr.inner)
            raise TypeError(expr)

        changed = True
        while changed:
            changed = False
            for qname, prod in self.lang.productions.items():
                if not nullable[qname] and expr_nullable(prod.body):
                    nullable[qname] = True
                    changed = True
        self._expr_nullable = expr_nullable
        return nullable

    def _left_targets(self, expr: BodyExpr) -> tuple[set[str], bool]:
        """Nonterminals reachable at the leftmost position, plus prefix nullability."""
        if isinstance(expr, (Terminal, PresenceFlag)):
            return set(), False
        if isinstance(expr, NonterminalRef):
            t = expr.target
            if t == IDENT_TOKEN or t in self.lang.token_productions:
                return set(), False
            if t in self.lang.interfaces:
                impls = set(self.lang.interface_impls.get(t, ()))
                return impls, any(self.nullable.get(i, False) for i in impls)
            return {t}, self.nullable.get(t, False)
        if isinstance(expr, Sequence):
            acc: set[str] = set()
            for item in expr.items:
                targets, through = self._left_targets(item)
                acc |= targets
                if not through:
                    return acc, False
            return acc, True
        if isinstance(expr, Alternative):
            acc = set()
            through = False
            for branch in expr.branches:
                targets, t = self._left_targets(branch)
                acc |= targets
                through = through or t
            return acc, through
        if isinstance(expr, Block):
            return self._left_targets(expr.inner)
        if isinstance(expr, Cardinality):
            targets, through = self._left_targets(expr.inner)
            if expr.kind in (CardinalityKind.OPTIONAL, CardinalityKind.STAR):
                return targets, True
            return targets, through
        raise TypeError(expr)

    def _check_left_recursion(self) -> None:
        edges = {q: self._left_targets(p.body)[0] for q, p in self.lang.productions.items()}
        state: dict[str, int] = {}

        def visit(node: str, path: list[str]) -> None:
            state[node] = 1
            for nxt in sorted(edges.get(node, ())):
                if state.get(nxt) == 1:
                    cycle = path[path.index(nxt):] + [nxt] if nxt in path else [nxt, nxt]
                    raise EngineBuildError([error(
                        "left recursion through " + " -> ".join(cycle), self.lang.name,
                        source="engine")])
                if state.get(nxt, 0) == 0 and nxt in edges:
                    visit(nxt, path + [nxt])
            state[node] = 2

        for qname in self.lang.productions:
            if state.get(qname, 0) == 0:
                visit(qname, [qname])

    def _check_reachability(self) -> None:
        seen: set[str] = set()
        work = [self.lang.start_symbol]
        while work:
            current = work.pop()
            if current in seen:
                continue
            seen.add(current)
            if current in self.lang.interfaces:
                work.extend(self.lang.interface_impls.get(current, ()))
                continue
            prod = self.lang.productions.get(current)
            if prod is None:
                continue
            for ref in referenced_nonterminals(prod.body):
                work.append(ref.target)
        for qname in self.lang.productions:
            if qname not in seen:
                self.warnings.append(warning(
                    f"production {qname!r} is not reachable from {self.lang.start_symbol!r}",
                    self.lang.name, source="engine"))

    def first_set(self, expr: BodyExpr) -> "_FirstSet":
        """What can begin ``expr``: terminal texts, IDENT, custom token classes."""
        out = _FirstSet()
        self._first_into(expr, out, set())
        return out

    def _first_into(self, expr: BodyExpr, out: "_FirstSet", visiting: set[str]) -> bool:
        """Returns True if the prefix is nullable (scan must continue)."""
        if isinstance(expr, Terminal):
            out.texts.add(expr.text)
            return False
        if isinstance(expr, PresenceFlag):
            out.texts.add(expr.keyword)
            return False
        if isinstance(expr, NonterminalRef):
            t = expr.target
            if t == IDENT_TOKEN:
                out.ident = True
                return False
            if t in self.lang.token_productions:
                out.classes.add(t)
                return False
            if t in visiting:
                return False
            targets = self.lang.interface_impls.get(t, ()) if t in self.lang.interfaces else (t,)
            through = False
            for target in targets:
                prod = self.lang.productions.get(target)
                if prod is not None:
                    through |= self._first_into(prod.body, out, visiting | {t, target})
            return through
        if isinstance(expr, Sequence):
            for item in expr.items:
                if not self._first_into(item, out, visiting):
                    return False
            return True
        if isinstance(expr, Alternative):
            through = False
            for branch in expr.branches:
                through |= self._first_into(branch, out, visiting)
            return through
        if isinstance(expr, Block):
            return self._first_into(expr.inner, out, visiting)
        if isinstance(expr, Cardinality):
            through = self._first_into(expr.inner, out, visiting)
            if expr.kind in (CardinalityKind.OPTIONAL, CardinalityKind.STAR):
                return True
            return through
        raise TypeError(expr)

    def _recovery_stops(self) -> dict[int, tuple["_FirstSet", "_FirstSet"]]:
        """For each star in the start production's own body: (item first, follow)."""
        start = self.lang.productions.get(self.lang.start_symbol)
        if start is None:
            return {}
        stops: dict[int, tuple[_FirstSet, _FirstSet]] = {}

        def walk(expr: BodyExpr, following: list[BodyExpr]) -> None:
            if isinstance(expr, Cardinality):
                if expr.kind in (CardinalityKind.STAR, CardinalityKind.PLUS):
                    first = self.first_set(expr.inner)
                    stop = _FirstSet()
                    for nxt in following:
                        if not self._first_into(nxt, stop, set()):
                            break
                    stops[id(expr)] = (first, stop)
                walk(expr.inner, following)
            elif isinstance(expr, Sequence):
                for i, item in enumerate(expr.items):
                    walk(item, list(expr.items[i + 1:]) + following)
            elif isinstance(expr, Alternative):
                for branch in expr.branches:
                    walk(branch, following)
            elif isinstance(expr, Block):
                walk(expr.inner, following)

        walk(start.body, [])
        return stops


def _count_label(expr: BodyExpr, label: str) -> tuple[int, int]:
    """(min, max) occurrences along a single derivation; max capped at 2."""
    if isinstance(expr, Terminal):
        return 0, 0
    if isinstance(expr, PresenceFlag):
        return (1, 1) if expr.label == label else (0, 0)
    if isinstance(expr, NonterminalRef):
        return (1, 1) if expr.label == label else (0, 0)
    if isinstance(expr, Sequence):
        lo = hi = 0
        for item in expr.items:
            l, h = _count_label(item, label)
            lo, hi = min(lo + l, 2), min(hi + h, 2)
        return lo, hi
    if isinstance(expr, Alternative):
        lows, highs = zip(*(_count_label(b, label) for b in expr.branches))
        return min(lows), max(highs)
    if isinstance(expr, Block):
        lo, hi = _count_label(expr.inner, label)
        if expr.label == label:
            lo, hi = min(lo + 1, 2), min(hi + 1, 2)
        return lo, hi
    if isinstance(expr, Cardinality):
        lo, hi = _count_label(expr.inner, label)
        if expr.kind is CardinalityKind.OPTIONAL:
            return 0, hi
        if expr.kind is CardinalityKind.STAR:
            return 0, 2 if hi else 0
        return lo, 2 if hi else 0
    raise TypeError(expr)


def _plan_labels(prod: Production) -> dict[str, str]:
    labels: dict[str, str] = {}
    presence: set[str] = set()
    names: set[str] = set()
    for node in iter_body(prod.body):
        if isinstance(node, PresenceFlag):
            presence.add(node.label)
            names.add(node.label)
        elif isinstance(node, (NonterminalRef, Block)) and node.label:
            names.add(node.label)
    for name in names:
        if name in presence:
            labels[name] = _BOOL
            continue
        lo, hi = _count_label(prod.body, name)
        if hi >= 2:
            labels[name] = _LIST
        elif lo == 0:
            labels[name] = _OPTIONAL
        else:
            labels[name] = _SCALAR
    return labels


def build_engine(lang: ComposedLanguage) -> ParserHandle:
    """Compile a composed language into a reusable parser handle."""
    return ParserHandle(lang)


# --------------------------------------------------------------------------
# lexing


def _scan_trivia(text: str, pos: int) -> tuple[int, list[tuple[TokenKind, int, int]], bool]:
    """Consume whitespace/comments; returns (new_pos, pieces, unterminated_comment)."""
    pieces: list[tuple[TokenKind, int, int]] = []
    n = len(text)
    unterminated = False
    while pos < n:
        ch = text[pos]
        if ch in " \t\r\n":
            start = pos
            while pos < n and text[pos] in " \t\r\n":
                pos += 1
            pieces.append((TokenKind.WHITESPACE, start, pos))
            continue
        if text.startswith("//", pos):
            start = pos
            end = text.find("\n", pos)
            pos = end if end != -1 else n
            pieces.append((TokenKind.COMMENT_LINE, start, pos))
            continue
        if text.startswith("/*", pos):
            start = pos
            end = text.find("*/", pos + 2)
            if end == -1:
                pos = n
                unterminated = True
            else:
                pos = end + 2
            pieces.append((TokenKind.COMMENT_BLOCK, start, pos))
            continue
        break
    return pos, pieces, unterminated


def _scan_word(text: str, pos: int, mode: _Mode, linemap: _LineMap) -> Token | None:
    """One non-trivia token at pos, or None at end of input."""
    if pos >= len(text):
        return None
    for qname, pattern in mode.token_rules:
        m = pattern.match(text, pos)
        if m and m.end() > pos:
            return Token(TokenKind.SYMBOL, m.group(), linemap.span(pos, m.end()), pos, cls=qname)
    m = IDENT_RE.match(text, pos)
    if m:
        kind = TokenKind.KEYWORD if m.group() in mode.keywords else TokenKind.IDENT
        return Token(kind, m.group(), linemap.span(pos, m.end()), pos)
    for sym in mode.symbols:
        if text.startswith(sym, pos):
            return Token(TokenKind.SYMBOL, sym, linemap.span(pos, pos + len(sym)), pos)
    return Token(TokenKind.ERROR_CHAR, text[pos], linemap.span(pos, pos + 1), pos)


def lex(text: str, lang: ComposedLanguage, mode: str | None = None) -> list[Token]:
    """Tokenize a whole document under one fragment's keyword set.

    Concatenating the returned token texts reproduces the input exactly.
    """
    handle_mode = _standalone_mode(lang, mode)
    linemap = _LineMap(text)
    tokens: list[Token] = []
    pos = 0
    while True:
        pos, pieces, _ = _scan_trivia(text, pos)
        for kind, start, end in pieces:
            tokens.append(Token(kind, text[start:end], linemap.span(start, end), start))
        word = _scan_word(text, pos, handle_mode, linemap)
        if word is None:
            break
        tokens.append(word)
        pos = word.end_offset
    return tokens


# keeps a strong reference to the language so ids stay unique
_mode_cache: dict[int, tuple[ComposedLanguage, ParserHandle]] = {}


def _standalone_mode(lang: ComposedLanguage, mode: str | None) -> _Mode:
    cached = _mode_cache.get(id(lang))
    if cached is None or cached[0] is not lang:
        cached = (lang, build_engine(lang))
        _mode_cache[id(lang)] = cached
    handle = cached[1]
    return handle.mode(mode or handle.host_fragment)


# --------------------------------------------------------------------------
# parsing


class _Acc:
    __slots__ = ("attrs", "children", "tokens")

    def __init__(self):
        self.attrs: list[tuple[str, object]] = []
        self.children: list[SyntaxNode] = []
        self.tokens: list[Token] = []

    def mark(self) -> tuple[int, int, int]:
        return len(self.attrs), len(self.children), len(self.tokens)

    def restore(self, mark: tuple[int, int, int]) -> None:
        a, c, t = mark
        del self.attrs[a:]
        del self.children[c:]
        del self.tokens[t:]


class _Run:
    def __init__(self, handle: ParserHandle, text: str, file: str):
        self.handle = handle
        self.lang = handle.lang
        self.text = text
        self.file = file
        self.linemap = _LineMap(text)
        self.memo: dict[tuple[str, int], tuple[SyntaxNode, int] | None] = {}
        self.trivia_memo: dict[int, int] = {}
        self.token_memo: dict[tuple[str, int], Token | None] = {}
        self.problems: list[ProblemReport] = []
        self.unterminated_at: int | None = None
        self.farthest = -1
        self.expected: set[str] = set()

    # -- token access --------------------------------------------------------

    def skip_trivia(self, pos: int) -> int:
        if pos not in self.trivia_memo:
            end, _, unterminated = _scan_trivia(self.text, pos)
            if unterminated and self.unterminated_at is None:
                self.unterminated_at = pos
            self.trivia_memo[pos] = end
        return self.trivia_memo[pos]

    def token_at(self, fragment: str, pos: int) -> Token | None:
        start = self.skip_trivia(pos)
        key = (fragment, start)
        if key not in self.token_memo:
            self.token_memo[key] = _scan_word(self.text, start, self.handle.mode(fragment), self.linemap)
        return self.token_memo[key]

    def miss(self, pos: int, expected: str) -> None:
        start = self.skip_trivia(pos)
        if start > self.farthest:
            self.farthest = start
            self.expected = {expected}
        elif start == self.farthest:
            self.expected.add(expected)

    def reset_progress(self, pos: int) -> None:
        self.farthest = pos
        self.expected = set()

    def failure_report(self) -> ProblemReport:
        pos = max(self.farthest, 0)
        anchor = min(pos, len(self.text))
        # keep end-of-input reports on the last content line of the document
        while anchor > 0 and anchor >= len(self.text.rstrip("\n")) and self.text[anchor - 1] == "\n":
            anchor -= 1
        line, col = self.linemap.linecol(anchor)
        tok = _scan_word(self.text, pos, self.handle.mode(self.handle.host_fragment), self.linemap)
        if tok is None:
            found = "end of input"
        elif tok.kind is TokenKind.ERROR_CHAR:
            return error(f"unexpected character {tok.text!r}", self.file, line, col, source="parser")
        else:
            found = repr(tok.text)
        expected = ", ".join(sorted(self.expected)) or "a token"
        return error(f"expected {expected}, found {found}", self.file, line, col, source="parser")

    # -- grammar matching ----------------------------------------------------

    def parse_production(self, qname: str, pos: int) -> tuple[SyntaxNode, int] | None:
        key = (qname, pos)
        if key in self.memo:
            return self.memo[key]
        prod = self.lang.productions[qname]
        fragment = self.lang.fragment_of(qname)
        acc = _Acc()
        end = self.match(prod.body, fragment, pos, acc, recovery=False)
        if end is None:
            self.memo[key] = None
            return None
        node = self._make_node(qname, acc, pos, end)
        result = (node, end)
        self.memo[key] = result
        return result

    def _make_node(self, qname: str, acc: _Acc, pos: int, end: int) -> SyntaxNode:
        plan = self.handle.label_plans[qname]
        attrs: dict[str, object] = {}
        for label, kind in plan.items():
            if kind == _BOOL:
                attrs[label] = any(v is True for l, v in acc.attrs if l == label)
            elif kind == _LIST:
                attrs[label] = [v for l, v in acc.attrs if l == label]
            else:
                values = [v for l, v in acc.attrs if l == label]
                if values:
                    attrs[label] = values[0]
                elif kind == _SCALAR:
                    raise RuntimeError(f"attribute {label!r} of {qname} missing after match")
        if acc.tokens or acc.children:
            starts = [t.offset for t in acc.tokens] + [_span_offset(c, self) for c in acc.children]
            span = self.linemap.span(min(starts), end)
        else:
            at = min(pos, len(self.text))
            span = self.linemap.span(at, at)
        return SyntaxNode(
            production=qname,
            attributes=attrs,
            children=tuple(acc.children),
            span=span,
            own_tokens=tuple(acc.tokens),
        )

    def match(self, expr: BodyExpr, fragment: str, pos: int, acc: _Acc, recovery: bool) -> int | None:
        if isinstance(expr, Terminal):
            return self._match_word(expr.text, fragment, pos, acc)
        if isinstance(expr, PresenceFlag):
            end = self._match_word(expr.keyword, fragment, pos, acc)
            if end is not None:
                acc.attrs.append((expr.label, True))
            return end
        if isinstance(expr, NonterminalRef):
            return self._match_ref(expr, fragment, pos, acc)
        if isinstance(expr, Sequence):
            mark = acc.mark()
            current = pos
            for item in expr.items:
                end = self.match(item, fragment, current, acc, recovery)
                if end is None:
                    acc.restore(mark)
                    return None
                current = end
            return current
        if isinstance(expr, Alternative):
            for branch in expr.branches:
                mark = acc.mark()
                end = self.match(branch, fragment, pos, acc, recovery)
                if end is not None:
                    return end
                acc.restore(mark)
            return None
        if isinstance(expr, Block):
            mark = acc.mark()
            end = self.match(expr.inner, fragment, pos, acc, recovery)
            if end is None:
                acc.restore(mark)
                return None
            if expr.label:
                start = min(self.skip_trivia(pos), end)
                acc.attrs.append((expr.label, self.text[start:end].strip()))
            return end
        if isinstance(expr, Cardinality):
            if expr.kind is CardinalityKind.OPTIONAL:
                mark = acc.mark()
                end = self.match(expr.inner, fragment, pos, acc, recovery)
                if end is None:
                    acc.restore(mark)
                    return pos
                return end
            # star and plus share the loop
            current = pos
            count = 0
            while True:
                mark = acc.mark()
                end = self.match(expr.inner, fragment, current, acc, recovery)
                if end is None or end == current:
                    if end == current:
                        acc.restore(mark)
                    if recovery and id(expr) in self.handle.recovery_stops and end is None:
                        skipped = self._try_recover(expr, fragment, current)
                        if skipped is not None:
                            current = skipped
                            continue
                    break
                current = end
                count += 1
            if expr.kind is CardinalityKind.PLUS and count == 0:
                return None
            return current
        raise TypeError(expr)

    def _try_recover(self, star: Cardinality, fragment: str, pos: int) -> int | None:
        first, stop = self.handle.recovery_stops[id(star)]
        tok = self.token_at(fragment, pos)
        if tok is None or stop.matches(tok):
            return None  # clean end of the repetition
        self.problems.append(self.failure_report())
        current = self.skip_trivia(pos)
        forced = False
        while True:
            tok = self.token_at(fragment, current)
            if tok is None:
                break
            # skip targets are concrete item starts and anything the follow accepts;
            # the item's IDENT wildcard is deliberately excluded to avoid cascades
            if forced and tok.kind is not TokenKind.ERROR_CHAR and (
                    tok.text in first.texts or stop.matches(tok)):
                break
            current = tok.end_offset
            forced = True
        self.reset_progress(current)
        return current

    def _match_word(self, word: str, fragment: str, pos: int, acc: _Acc) -> int | None:
        tok = self.token_at(fragment, pos)
        if tok is None or tok.kind not in WORD_KINDS or tok.text != word:
            self.miss(pos, repr(word))
            return None
        acc.tokens.append(tok)
        return tok.end_offset

    def _match_ref(self, ref: NonterminalRef, fragment: str, pos: int, acc: _Acc) -> int | None:
        target = ref.target
        if target == IDENT_TOKEN:
            tok = self.token_at(fragment, pos)
            if tok is None or tok.kind is not TokenKind.IDENT:
                self.miss(pos, "IDENT")
                return None
            acc.tokens.append(tok)
            if ref.label:
                acc.attrs.append((ref.label, tok.text))
            return tok.end_offset
        if target in self.lang.token_productions:
            tok = self.token_at(fragment, pos)
            if tok is None or tok.cls != target:
                self.miss(pos, target.split(".")[-1])
                return None
            acc.tokens.append(tok)
            if ref.label:
                acc.attrs.append((ref.label, tok.text))
            return tok.end_offset
        if target in self.lang.interfaces:
            for impl in self.lang.interface_impls.get(target, ()):
                result = self.parse_production(impl, pos)
                if result is not None:
                    node, end = result
                    acc.children.append(node)
                    if ref.label:
                        acc.attrs.append((ref.label, node))
                    return end
            return None
        result = self.parse_production(target, pos)
        if result is None:
            return None
        node, end = result
        acc.children.append(node)
        if ref.label:
            acc.attrs.append((ref.label, node))
        return end


def _span_offset(node: SyntaxNode, run: _Run) -> int:
    leaves = node.leaf_tokens()
    if leaves:
        return leaves[0].offset
    # zero-width node: recover the offset from its span
    line, col = node.span.start_line, node.span.start_col
    return run.linemap.starts[line - 1] + col - 1


def parse(
    text: str,
    lang: ComposedLanguage,
    file: str = "<document>",
    handle: ParserHandle | None = None,
    start: str | None = None,
) -> ParseOutcome:
    """Parse a document; problems never raise, they land in the outcome."""
    handle = handle or build_engine(lang)
    run = _Run(handle, text, file)
    start_symbol = start or lang.start_symbol
    fragment = lang.fragment_of(start_symbol)

    prod = lang.productions.get(start_symbol)
    root: SyntaxNode | None = None
    end: int | None = None
    if prod is None:
        run.problems.append(error(f"start production {start_symbol!r} not found", file, source="parser"))
    else:
        acc = _Acc()
        end = run.match(prod.body, fragment, 0, acc, recovery=True)
        if end is not None:
            root = run._make_node(start_symbol, acc, 0, end)

    problems = list(run.problems)
    if prod is not None and end is None:
        problems.append(run.failure_report())
    elif end is not None:
        trailing = run.skip_trivia(end)
        if trailing < len(text):
            run.reset_progress(trailing)
            run.miss(trailing, "end of input")
            problems.append(run.failure_report())
    if run.unterminated_at is not None:
        line, col = run.linemap.linecol(run.unterminated_at)
        problems.append(error("unterminated block comment", file, line, col, source="parser"))

    if any(p.severity.value == "error" for p in problems):
        root = None
    tokens = _covering_tokens(run, root) if root is not None else lex(text, lang, handle.host_fragment)
    return ParseOutcome(root=root, tokens=tuple(tokens), problems=tuple(problems))


def _covering_tokens(run: _Run, root: SyntaxNode) -> list[Token]:
    leaves = root.leaf_tokens()
    tokens: list[Token] = []
    pos = 0
    for leaf in leaves:
        _fill_trivia(run, pos, leaf.offset, tokens)
        tokens.append(leaf)
        pos = leaf.end_offset
    _fill_trivia(run, pos, len(run.text), tokens)
    return tokens


def _fill_trivia(run: _Run, start: int, end: int, out: list[Token]) -> None:
    pos = start
    while pos < end:
        new_pos, pieces, _ = _scan_trivia(run.text, pos)
        for kind, s, e in pieces:
            e = min(e, end)
            if s < e:
                out.append(Token(kind, run.text[s:e], run.linemap.span(s, e), s))
        if new_pos <= pos:
            break
        pos = new_pos


def trees_equal(a: SyntaxNode | None, b: SyntaxNode | None) -> bool:
    """Structural equality: production, attributes, children; spans ignored."""
    return a == b
