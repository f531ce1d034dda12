"""Text formats: expressions, vector fields and model files.

Expressions use ordinary infix notation.  Binding strength, tightest first:
``^``, unary ``-``/``+``, ``*`` ``/``, binary ``+`` ``-``.  ``exp(...)`` is the
only function and its argument must be a linear form in the coordinates with
rational coefficients.  Division is allowed only by units of the
exp-polynomial ring (a nonzero parameter expression times an exponential).

Model files are line oriented; see ``docs/model_format.md`` for the EBNF.
Inside ``metric { ... }`` a ``line = ...;`` statement gives the line element
in differentials ``dA``; a product ``f*dA*dB`` with ``A != B`` contributes
``f/2`` to both ``g[A][B]`` and ``g[B][A]``.
"""

import re
from dataclasses import dataclass

from .errors import (
    ContextError,
    DimensionMismatch,
    DivisionByZero,
    ExprSyntaxError,
    NonRationalFrequency,
    ParseError,
    UnknownSymbol,
)
from .expr import ExpPoly, context
from .geometry import SpaceModel, VectorField

CONSTRAINTS = ("pm1", "nonzero")


@dataclass(frozen=True)
class Token:
    kind: str  # NUM, IDENT, OP, NL, EOF
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<comment>#[^\n]*)|(?P<nl>\n)|(?P<num>\d+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()\[\]{}=;:,])"
)


def tokenize(text, line=1, col=1):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind == "nl":
            tokens.append(Token("NL", "\n", line, col))
            line += 1
            col = 1
        else:
            if kind == "num":
                tokens.append(Token("NUM", chunk, line, col))
            elif kind == "ident":
                tokens.append(Token("IDENT", chunk, line, col))
            elif kind == "op":
                tokens.append(Token("OP", chunk, line, col))
            col += len(chunk)
        pos = m.end()
    tokens.append(Token("EOF", "", line, col))
    return tokens


# -- expressions ----------------------------------------------------------

_INFIX = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_BP = 30


class _ExprParser:
    def __init__(self, tokens, ctx, extra=None):
        # newlines are insignificant inside an expression
        self.tokens = [t for t in tokens if t.kind != "NL"]
        self.pos = 0
        self.ctx = ctx
        self.extra = extra or {}

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect(self, text):
        tok = self.advance()
        if tok.text != text:
            found = "end of input" if tok.kind == "EOF" else repr(tok.text)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", tok.line, tok.col)
        return tok

    def parse(self):
        if self.peek().kind == "EOF":
            tok = self.peek()
            raise ExprSyntaxError("empty expression", tok.line, tok.col)
        value = self.expr(0)
        tok = self.peek()
        if tok.kind != "EOF":
            raise ExprSyntaxError(f"unexpected {tok.text!r}", tok.line, tok.col)
        return value

    def expr(self, rbp):
        left = self.nud(self.advance())
        while True:
            tok = self.peek()
            lbp = _INFIX.get(tok.text, 0) if tok.kind == "OP" else 0
            if lbp <= rbp:
                return left
            self.advance()
            left = self.led(tok, left)

    def nud(self, tok):
        if tok.kind == "NUM":
            return ExpPoly.const(self.ctx, int(tok.text))
        if tok.kind == "IDENT":
            if tok.text == "exp" and self.peek().text == "(":
                return self.exp_call(tok)
            return self.symbol(tok)
        if tok.text == "(":
            value = self.expr(0)
            self.expect(")")
            return value
        if tok.text == "-":
            return -self.expr(_UNARY_BP)
        if tok.text == "+":
            return self.expr(_UNARY_BP)
        found = "end of input" if tok.kind == "EOF" else repr(tok.text)
        raise ExprSyntaxError(f"expected an operand, found {found}", tok.line, tok.col)

    def led(self, tok, left):
        op = tok.text
        if op == "^":
            right = self.expr(_INFIX["^"] - 1)
            return self.power(tok, left, right)
        right = self.expr(_INFIX[op])
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        try:
            return left / right
        except DivisionByZero as exc:
            raise ExprSyntaxError(f"cannot divide: {exc}", tok.line, tok.col) from None

    def power(self, tok, base, exponent):
        n = _as_integer(exponent)
        if n is None:
            raise ExprSyntaxError("exponent must be an integer constant", tok.line, tok.col)
        try:
            return base ** n
        except DivisionByZero as exc:
            raise ExprSyntaxError(f"cannot raise to a negative power: {exc}", tok.line, tok.col) from None

    def symbol(self, tok):
        name = tok.text
        if name in self.extra:
            return self.extra[name]
        ctx = self.ctx
        try:
            return ExpPoly.coord(ctx, ctx.coord_index(name))
        except KeyError:
            pass
        if name in ctx.params:
            return ExpPoly.param(ctx, name)
        raise UnknownSymbol(f"unknown symbol {name!r}", tok.line, tok.col)

    def exp_call(self, tok):
        self.expect("(")
        arg = self.expr(0)
        self.expect(")")
        freq = [0] * self.ctx.dim
        for mono, f, c in arg.terms:
            if any(f) or sum(mono) != 1 or not c.is_const:
                raise NonRationalFrequency(
                    "exp argument must be a rational linear form in the coordinates, "
                    f"got {arg.to_str()!r}",
                    tok.line,
                    tok.col,
                )
            freq[mono.index(1)] = c.const_value()
        return ExpPoly.exp(self.ctx, freq)


def _as_integer(value):
    if len(value.terms) > 1:
        return None
    if not value.terms:
        return 0
    mono, freq, c = value.terms[0]
    if any(mono) or any(freq) or not c.is_const:
        return None
    q = c.const_value()
    if q.denominator != 1:
        return None
    return int(q.numerator)


def parse_expr(text, ctx):
    """Parse ``text`` into a canonical :class:`ExpPoly` over ``ctx``."""
    return _ExprParser(tokenize(text), ctx).parse()


def parse_scalar(text, ctx):
    """Parse a coordinate-free expression and return its ParamScalar."""
    value = parse_expr(text, ctx)
    return _constant_of(value, text)


def _constant_of(value, what, tok=None):
    if not value.terms:
        return value.ctx.space.zero()
    mono, freq, c = value.terms[0]
    if len(value.terms) > 1 or any(mono) or any(freq):
        line, col = (tok.line, tok.col) if tok else (None, None)
        raise ParseError(f"expected a constant (parameters only), got {what!r}", line, col)
    return c


def format_expr(value):
    return value.to_str()


# -- model documents ------------------------------------------------------


class _DocParser:
    def __init__(self, text):
        self.tokens = tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def skip_newlines(self):
        while self.peek().kind == "NL":
            self.advance()

    def error(self, tok, message, cls=ExprSyntaxError):
        return cls(message, tok.line, tok.col)

    def expect(self, text, skip_nl=False):
        if skip_nl:
            self.skip_newlines()
        tok = self.advance()
        if tok.text != text or tok.kind not in ("OP", "IDENT"):
            found = {"EOF": "end of input", "NL": "end of line"}.get(tok.kind, repr(tok.text))
            raise self.error(tok, f"expected {text!r}, found {found}")
        return tok

    def expect_kind(self, kind, what):
        tok = self.advance()
        if tok.kind != kind:
            found = {"EOF": "end of input", "NL": "end of line"}.get(tok.kind, repr(tok.text))
            raise self.error(tok, f"expected {what}, found {found}")
        return tok

    def end_of_line(self):
        tok = self.advance()
        if tok.kind not in ("NL", "EOF") and tok.text != ";":
            raise self.error(tok, f"unexpected {tok.text!r} at end of statement")

    def rest_of_line(self):
        out = []
        while self.peek().kind not in ("NL", "EOF"):
            out.append(self.advance())
        return out

    def statement_tokens(self, stop_newline):
        """Tokens up to ';' (or newline when ``stop_newline``); the terminator is consumed."""
        out = []
        while True:
            tok = self.peek()
            if tok.text == ";" and tok.kind == "OP":
                self.advance()
                break
            if tok.kind == "EOF" or (stop_newline and tok.kind == "NL"):
                break
            if tok.text == "}" and tok.kind == "OP" and not stop_newline:
                raise self.error(tok, "missing ';' before '}'")
            out.append(self.advance())
        if not out:
            raise self.error(self.peek(), "empty expression")
        end = out[-1]
        out.append(Token("EOF", "", end.line, end.col + len(end.text)))
        return out

    def index(self):
        self.expect("[")
        tok = self.expect_kind("NUM", "an index")
        self.expect("]")
        return int(tok.text), tok

    def parse(self, name=None):
        dim = None
        dim_tok = None
        coords = None
        params = []
        consts = []
        constraints = {}
        metric_stmts = None
        fields = []
        scalars = []
        solitons = []
        seen = set()
        while True:
            self.skip_newlines()
            tok = self.advance()
            if tok.kind == "EOF":
                break
            if tok.kind != "IDENT":
                raise self.error(tok, f"expected a statement keyword, found {tok.text!r}")
            kw = tok.text
            if kw in ("model", "dim", "coords", "params", "consts", "metric") and kw in seen:
                raise self.error(tok, f"duplicate {kw!r} statement")
            seen.add(kw)
            if kw == "model":
                name = self.expect_kind("IDENT", "a model name").text
                self.end_of_line()
            elif kw == "dim":
                dim_tok = self.expect_kind("NUM", "the dimension")
                dim = int(dim_tok.text)
                if dim < 1:
                    raise self.error(dim_tok, "dimension must be positive", DimensionMismatch)
                self.end_of_line()
            elif kw == "coords":
                coords = [t for t in self.rest_of_line()]
                for t in coords:
                    if t.kind != "IDENT":
                        raise self.error(t, f"expected a coordinate name, found {t.text!r}")
                self.end_of_line()
            elif kw == "params":
                for p, tags in self.param_list():
                    params.append(p)
                    constraints[p.text] = tags
                self.end_of_line()
            elif kw == "consts":
                for t in self.rest_of_line():
                    if t.kind != "IDENT":
                        raise self.error(t, f"expected a constant name, found {t.text!r}")
                    consts.append(t)
                    constraints[t.text] = ("const",)
                self.end_of_line()
            elif kw == "metric":
                metric_stmts = self.block(tok)
            elif kw == "vectorfield":
                fname = self.expect_kind("IDENT", "a field name")
                fields.append((fname, self.block(tok)))
            elif kw == "scalar":
                sname = self.expect_kind("IDENT", "a scalar name")
                self.expect("=")
                scalars.append((sname, self.statement_tokens(stop_newline=True)))
            elif kw == "soliton":
                fname = self.expect_kind("IDENT", "a field name")
                self.expect("lambda")
                self.expect("=")
                solitons.append((fname, self.statement_tokens(stop_newline=True)))
            else:
                raise self.error(tok, f"unknown statement {kw!r}")

        last = self.tokens[-1]
        if coords is None:
            raise self.error(last, "missing 'coords' statement")
        if dim is None:
            dim = len(coords)
        elif dim != len(coords):
            raise self.error(
                dim_tok, f"dim {dim} but {len(coords)} coordinates declared", DimensionMismatch
            )
        if metric_stmts is None:
            raise self.error(last, "missing 'metric' block")

        names = {}
        for t in list(coords) + params + consts:
            if t.text in names:
                raise self.error(t, f"name {t.text!r} declared twice")
            if t.text == "exp":
                raise self.error(t, "'exp' is reserved")
            names[t.text] = t
        all_params = [t.text for t in params] + [t.text for t in consts]
        signs = [p for p, tags in constraints.items() if "pm1" in tags]
        ctx = context([t.text for t in coords], all_params, signs)

        metric = self.build_metric(ctx, metric_stmts)
        vfields = {}
        for fname, stmts in fields:
            if fname.text in vfields:
                raise self.error(fname, f"vector field {fname.text!r} declared twice")
            vfields[fname.text] = self.build_field(ctx, stmts)
        svals = {}
        for sname, toks in scalars:
            svals[sname.text] = _ExprParser(toks, ctx).parse()
        lambdas = {}
        for fname, toks in solitons:
            if fname.text not in vfields:
                raise self.error(fname, f"soliton refers to unknown vector field {fname.text!r}", UnknownSymbol)
            value = _ExprParser(toks, ctx).parse()
            lambdas[fname.text] = _constant_of(value, value.to_str(), toks[0])
        return SpaceModel(
            name=name or "model",
            ctx=ctx,
            metric=metric,
            constraints={p: tuple(constraints.get(p, ())) for p in all_params},
            fields=vfields,
            scalars=svals,
            solitons=lambdas,
        )

    def param_list(self):
        out = []
        toks = self.rest_of_line()
        i = 0
        while i < len(toks):
            t = toks[i]
            if t.kind != "IDENT":
                raise self.error(t, f"expected a parameter name, found {t.text!r}")
            tags = []
            i += 1
            while i < len(toks) and toks[i].text == ":":
                if i + 1 >= len(toks) or toks[i + 1].kind != "IDENT":
                    bad = toks[i + 1] if i + 1 < len(toks) else toks[i]
                    raise self.error(bad, "expected a constraint after ':'")
                tag = toks[i + 1]
                if tag.text not in CONSTRAINTS:
                    raise self.error(tag, f"unknown constraint {tag.text!r} (expected one of {', '.join(CONSTRAINTS)})")
                tags.append(tag.text)
                i += 2
            out.append((t, tuple(tags)))
        return out

    def block(self, kw_tok):
        self.expect("{", skip_nl=True)
        stmts = []
        while True:
            self.skip_newlines()
            tok = self.peek()
            if tok.text == "}":
                self.advance()
                break
            if tok.kind == "EOF":
                raise self.error(tok, f"unterminated {kw_tok.text!r} block opened at {kw_tok.line}:{kw_tok.col}")
            head = self.advance()
            if head.kind != "IDENT":
                raise self.error(head, f"expected an entry, found {head.text!r}")
            idx = []
            while self.peek().text == "[":
                idx.append(self.index())
            self.expect("=")
            stmts.append((head, idx, self.statement_tokens(stop_newline=False)))
        return stmts

    def build_metric(self, ctx, stmts):
        n = ctx.dim
        entries = [[ExpPoly.zero(ctx) for _ in range(n)] for _ in range(n)]
        assigned = {}
        for head, idx, toks in stmts:
            if head.text == "g":
                if len(idx) != 2:
                    raise self.error(head, "metric entries are written g[i][j]")
                (i, ti), (j, tj) = idx
                for k, t in ((i, ti), (j, tj)):
                    if not 1 <= k <= n:
                        raise self.error(t, f"index {k} outside 1..{n}", DimensionMismatch)
                pair = (min(i, j), max(i, j))
                if pair in assigned:
                    raise self.error(head, f"g[{i}][{j}] assigned twice")
                assigned[pair] = head
                value = _ExprParser(toks, ctx).parse()
                entries[i - 1][j - 1] = value
                entries[j - 1][i - 1] = value
            elif head.text == "line":
                if idx:
                    raise self.error(head, "'line' takes no indices")
                line_metric = self.line_element(ctx, toks)
                for a in range(n):
                    for b in range(n):
                        entries[a][b] = entries[a][b] + line_metric[a][b]
            else:
                raise self.error(head, f"expected 'g[i][j]' or 'line', found {head.text!r}")
        return tuple(tuple(row) for row in entries)

    def line_element(self, ctx, toks):
        n = ctx.dim
        dnames = ["d" + c for c in ctx.coords]
        clash = set(dnames) & (set(ctx.coords) | set(ctx.params))
        if clash:
            raise self.error(toks[0], f"differential names clash with declared names: {sorted(clash)}")
        ext = context(list(ctx.coords) + dnames, ctx.params, ctx.signs)
        value = _ExprParser(toks, ext).parse()
        out = [[[] for _ in range(n)] for _ in range(n)]
        for mono, freq, c in value.terms:
            dpart = mono[n:]
            if any(freq[n:]) or sum(dpart) != 2:
                raise self.error(toks[0], "line element must be quadratic in the differentials")
            pos = [k for k in range(n) for _ in range(dpart[k])]
            a, b = pos
            base = (mono[:n], freq[:n])
            if a == b:
                out[a][a].append((*base, c))
            else:
                half = c * ctx.space.const("1/2")
                out[a][b].append((*base, half))
                out[b][a].append((*base, half))
        return [[ExpPoly.from_terms(ctx, out[a][b]) for b in range(n)] for a in range(n)]

    def build_field(self, ctx, stmts):
        n = ctx.dim
        comps = [ExpPoly.zero(ctx) for _ in range(n)]
        seen = set()
        for head, idx, toks in stmts:
            if head.text != "X" or len(idx) != 1:
                raise self.error(head, "vector field components are written X[i]")
            (i, ti), = idx
            if not 1 <= i <= n:
                raise self.error(ti, f"index {i} outside 1..{n}", DimensionMismatch)
            if i in seen:
                raise self.error(head, f"X[{i}] assigned twice")
            seen.add(i)
            comps[i - 1] = _ExprParser(toks, ctx).parse()
        return VectorField(tuple(comps))


def parse_model(text, name=None):
    """Parse a model document into a :class:`SpaceModel`."""
    try:
        return _DocParser(text).parse(name)
    except ContextError as exc:
        raise ParseError(str(exc)) from None


def format_model(model):
    ctx = model.ctx
    lines = [f"model {model.name}", f"dim {ctx.dim}", "coords " + " ".join(ctx.coords)]
    plain = [p for p in ctx.params if "const" not in model.constraints.get(p, ())]
    consts = [p for p in ctx.params if "const" in model.constraints.get(p, ())]
    if plain:
        lines.append(
            "params " + " ".join(p + "".join(":" + t for t in model.constraints.get(p, ())) for p in plain)
        )
    if consts:
        lines.append("consts " + " ".join(consts))
    lines.append("metric {")
    for i in range(ctx.dim):
        for j in range(i + 1):
            entry = model.metric[i][j]
            if not entry.is_zero():
                lines.append(f"  g[{i + 1}][{j + 1}] = {entry.to_str()};")
    lines.append("}")
    for fname, field in model.fields.items():
        lines.append(f"vectorfield {fname} {{")
        for i, comp in enumerate(field.comps):
            if not comp.is_zero():
                lines.append(f"  X[{i + 1}] = {comp.to_str()};")
        lines.append("}")
    for sname, value in model.scalars.items():
        lines.append(f"scalar {sname} = {value.to_str()}")
    for fname, lam in model.solitons.items():
        lines.append(f"soliton {fname} lambda = {lam.to_str()}")
    return "\n".join(lines) + "\n"


def format(value):
    """Deterministic text for an ExpPoly or a SpaceModel."""
    if isinstance(value, SpaceModel):
        return format_model(value)
    return value.to_str()
