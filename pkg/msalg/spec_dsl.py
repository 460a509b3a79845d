"""
Instance file format (.msa)

Lark grammar for sorts, signatures, algebras, homomorphisms, preorders,
systems, filters, families, system morphisms and isotone maps; a loader
that resolves names and runs every validator, reporting located
diagnostics; and a canonical serializer.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedInput, UnexpectedToken

from .errors import MsalgError, ParseError, ResolveError, ValidationFailed
from .logging_config import LoggerMixin
from .models import Defect, Diagnostic, Severity
from .order_filters import IsotoneMap, Preorder, Ultrafilter, frechet_filter, principal_filter
from .retraction import system_morphism
from .sig_alg import Algebra, Arity, Homomorphism, Signature, validate_algebra
from .sorted_core import SortedMapping, SortedSet, canonical_sorted, compose
from .systems_limits import InductiveSystem, ProjectiveSystem, validate_inductive_system, validate_projective_system

GRAMMAR = r"""
start: _decl*

_decl: sorts_decl
     | signature
     | algebra
     | hom
     | preorder
     | system
     | ultrafilter
     | final_filter
     | principal_filter
     | family
     | sysmap
     | isomap

sorts_decl: "sorts" IDENT+ ";"

signature: "signature" IDENT "{" op_decl* "}"
op_decl: "op" IDENT ":" IDENT* "->" IDENT ";"

algebra: "algebra" IDENT "over" IDENT "{" carrier* optable* "}"
carrier: "carrier" IDENT "=" "{" IDENT* "}" ";"
optable: "op" IDENT "(" [IDENT ("," IDENT)*] ")" "=" IDENT ";"

hom: "hom" IDENT ":" IDENT "->" IDENT "{" hom_line* "}"
hom_line: IDENT ":" pair ("," pair)* ";"
pair: IDENT "->" IDENT

preorder: "preorder" IDENT "{" "elems" IDENT+ ";" le* "}"
le: "le" IDENT IDENT ";"

system: (PROJSYS | INDSYS) IDENT "over" IDENT "{" at* map_line* "}"
at: "at" IDENT "=" IDENT ";"
map_line: "map" IDENT "->" IDENT "=" IDENT ";"

ultrafilter: "ultrafilter" IDENT "on" IDENT "=" "principal" IDENT ";"
final_filter: "filter" IDENT "on" IDENT "=" "finalsections" ";"
principal_filter: "filter" IDENT "on" IDENT "=" "principal" "{" IDENT+ "}" ";"

family: "family" IDENT "on" IDENT "{" at* "}"
sysmap: "sysmap" IDENT ":" IDENT "->" IDENT "{" at* "}"
isomap: "isomap" IDENT ":" IDENT "->" IDENT "{" at* "}"

PROJSYS: "projsys"
INDSYS: "indsys"
IDENT: /[\w⋆][\w'⋆]*/
COMMENT: /#[^\n]*/

%import common.WS
%ignore WS
%ignore COMMENT
"""

KEYWORDS = frozenset({
    "sorts", "signature", "op", "algebra", "over", "carrier", "hom", "preorder", "elems", "le",
    "projsys", "indsys", "at", "map", "ultrafilter", "filter", "on", "principal", "finalsections",
    "family", "sysmap", "isomap",
})

# codes that mean a name could not be resolved; everything else is a validation failure
RESOLVE_CODES = frozenset({"UnknownName", "DuplicateName", "KindMismatch", "NoSorts"})

_parser: Optional[Lark] = None


def get_parser() -> Lark:
    global _parser
    if _parser is None:
        _parser = Lark(GRAMMAR, parser="lalr", lexer="basic", propagate_positions=True, maybe_placeholders=False)
    return _parser


@dataclass
class Node:
    """One parsed declaration, names kept as located tokens"""
    kind: str
    name: Optional[Token]
    line: int
    column: int
    parts: Dict[str, Any] = field(default_factory=dict)


@v_args(meta=True)
class InstanceTransformer(Transformer):
    """Parse tree to declaration nodes"""

    def start(self, meta, items):
        return list(items)

    def sorts_decl(self, meta, items):
        return Node("sorts", None, meta.line, meta.column, {"sorts": list(items)})

    def signature(self, meta, items):
        return Node("signature", items[0], meta.line, meta.column, {"ops": list(items[1:])})

    def op_decl(self, meta, items):
        return items[0], list(items[1:-1]), items[-1]

    def algebra(self, meta, items):
        rest = items[2:]
        return Node("algebra", items[0], meta.line, meta.column,
                    {"sig": items[1],
                     "carriers": [r[1:] for r in rest if r[0] == "carrier"],
                     "tables": [r[1:] for r in rest if r[0] == "table"]})

    def carrier(self, meta, items):
        return "carrier", items[0], list(items[1:])

    def optable(self, meta, items):
        return "table", items[0], list(items[1:-1]), items[-1]

    def hom(self, meta, items):
        return Node("hom", items[0], meta.line, meta.column,
                    {"source": items[1], "target": items[2], "lines": list(items[3:])})

    def hom_line(self, meta, items):
        return items[0], list(items[1:])

    def pair(self, meta, items):
        return items[0], items[1]

    def preorder(self, meta, items):
        elems = [t for t in items if isinstance(t, Token)]
        return Node("preorder", elems[0], meta.line, meta.column,
                    {"elems": elems[1:], "le": [t for t in items if isinstance(t, tuple)]})

    def le(self, meta, items):
        return items[0], items[1]

    def system(self, meta, items):
        kind, name, over, *rest = items
        return Node(str(kind), name, meta.line, meta.column,
                    {"over": over,
                     "at": [r[1:] for r in rest if r[0] == "at"],
                     "maps": [r[1:] for r in rest if r[0] == "map"]})

    def at(self, meta, items):
        return "at", items[0], items[1]

    def map_line(self, meta, items):
        return "map", items[0], items[1], items[2]

    def ultrafilter(self, meta, items):
        return Node("ultrafilter", items[0], meta.line, meta.column, {"on": items[1], "points": [items[2]]})

    def final_filter(self, meta, items):
        return Node("filter", items[0], meta.line, meta.column, {"on": items[1], "form": "finalsections"})

    def principal_filter(self, meta, items):
        return Node("filter", items[0], meta.line, meta.column,
                    {"on": items[1], "form": "principal", "points": list(items[2:])})

    def family(self, meta, items):
        return Node("family", items[0], meta.line, meta.column,
                    {"on": items[1], "at": [r[1:] for r in items[2:]]})

    def sysmap(self, meta, items):
        return Node("sysmap", items[0], meta.line, meta.column,
                    {"source": items[1], "target": items[2], "at": [r[1:] for r in items[3:]]})

    def isomap(self, meta, items):
        return Node("isomap", items[0], meta.line, meta.column,
                    {"source": items[1], "target": items[2], "at": [r[1:] for r in items[3:]]})


@dataclass(frozen=True)
class Declaration:
    """A named, validated item; ``refs`` keeps the names it was declared with"""
    kind: str
    name: str
    value: Any
    refs: Mapping[str, Any] = field(default_factory=dict)
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class InstanceFile:
    sorts: Tuple[str, ...] = ()
    declarations: Tuple[Declaration, ...] = ()

    def __iter__(self) -> Iterator[Declaration]:
        return iter(self.declarations)

    def __len__(self) -> int:
        return len(self.declarations)

    def get(self, name: str) -> Declaration:
        for d in self.declarations:
            if d.name == name:
                return d
        raise KeyError(name)

    def of_kind(self, *kinds: str) -> List[Declaration]:
        return [d for d in self.declarations if d.kind in kinds]

    def with_declaration(self, decl: Declaration) -> "InstanceFile":
        if any(d.name == decl.name for d in self.declarations):
            raise ValueError(f"Name {decl.name} is already declared")
        return InstanceFile(self.sorts, self.declarations + (decl,))


class _Skip(Exception):
    """Declaration abandoned; its diagnostics are already recorded"""


def _syntax_diagnostic(e: UnexpectedInput, text: str) -> Diagnostic:
    if isinstance(e, UnexpectedToken) and e.token.type != "$END":
        tok = e.token
        if str(tok) in KEYWORDS and "IDENT" in e.expected:
            message = f"'{tok}' is a reserved keyword"
        else:
            message = f"Unexpected '{tok}', expected one of {', '.join(sorted(e.expected))}"
        return Diagnostic(code="Syntax", message=message, line=max(1, tok.line), column=max(1, tok.column),
                          end_column=tok.end_column)
    if isinstance(e, UnexpectedCharacters):
        return Diagnostic(code="Syntax", message=f"Unexpected character {e.char!r}",
                          line=max(1, e.line), column=max(1, e.column), end_column=e.column + 1)
    lines = text.split("\n") or [""]
    return Diagnostic(code="Syntax", message="Unexpected end of input",
                      line=len(lines), column=len(lines[-1]) + 1)


class InstanceLoader(LoggerMixin):
    """Resolves parsed declarations in order and validates each one"""

    def __init__(self):
        self.sorts: Optional[Tuple[str, ...]] = None
        self.sorts_node: Optional[Node] = None
        self.declared: Dict[str, Declaration] = {}
        self.order: List[Declaration] = []
        self.failed: set = set()
        self.diagnostics: List[Diagnostic] = []

    # diagnostics

    def _diag(self, code: str, message: str, where: Union[Token, Node], related: Optional[str] = None) -> None:
        if isinstance(where, Token):
            line, column, end = where.line, where.column, where.end_column
        else:
            line, column = where.line, where.column
            end = where.name.end_column if where.name is not None else None
        self.diagnostics.append(Diagnostic(severity=Severity.ERROR, code=code, message=message,
                                           line=max(1, line), column=max(1, column), end_column=end,
                                           related=related))

    def _defects(self, defects: Sequence[Defect], where: Union[Token, Node], related: str) -> None:
        for d in defects:
            self._diag(d.kind, f"{d.subject}: {d.detail}", where, related)

    def _ref(self, tok: Token, *kinds: str) -> Declaration:
        name = str(tok)
        if name in self.failed:
            raise _Skip()
        if name not in self.declared:
            self._diag("UnknownName", f"{name} is not declared before use", tok, name)
            raise _Skip()
        decl = self.declared[name]
        if decl.kind not in kinds:
            self._diag("KindMismatch", f"{name} is a {decl.kind}, expected {' or '.join(kinds)}", tok, name)
            raise _Skip()
        return decl

    def _abandon_if_reported(self, before: int) -> None:
        if len(self.diagnostics) > before:
            raise _Skip()

    def _need_sorts(self, node: Node) -> Tuple[str, ...]:
        if self.sorts is None:
            self._diag("NoSorts", "No sorts declaration precedes this declaration", node)
            raise _Skip()
        return self.sorts

    # declarations

    def load(self, nodes: List[Node]) -> InstanceFile:
        for node in nodes:
            if node.kind == "sorts":
                self._load_sorts(node)
                continue
            name = str(node.name)
            if name in self.declared or name in self.failed:
                self._diag("DuplicateName", f"{name} is already declared", node.name, name)
                continue
            before = len(self.diagnostics)
            try:
                value, refs = getattr(self, f"_load_{node.kind}")(node)
                if len(self.diagnostics) > before:
                    raise _Skip()
            except _Skip:
                self.failed.add(name)
                continue
            except MsalgError as e:
                self._diag(e.code, e.message, node, name)
                self.failed.add(name)
                continue
            decl = Declaration(node.kind, name, value, refs, node.line)
            self.declared[name] = decl
            self.order.append(decl)
        return InstanceFile(self.sorts or (), tuple(self.order))

    def _load_sorts(self, node: Node) -> None:
        if self.sorts_node is not None:
            self._diag("Sorts", "Only one sorts declaration is allowed per file", node)
            return
        self.sorts_node = node
        seen = []
        for tok in node.parts["sorts"]:
            if str(tok) in seen:
                self._diag("DuplicateName", f"Sort {tok} is declared twice", tok, str(tok))
            else:
                seen.append(str(tok))
        self.sorts = tuple(seen)

    def _sort(self, tok: Token) -> str:
        if str(tok) not in self.sorts:
            self._diag("UnknownSort", f"{tok} is not a sort", tok)
            raise _Skip()
        return str(tok)

    def _load_signature(self, node: Node):
        sorts = self._need_sorts(node)
        ops = {}
        for op, word, result in node.parts["ops"]:
            if str(op) in ops:
                self._diag("DuplicateName", f"Operation {op} is declared twice", op, str(op))
                continue
            bad = [t for t in (*word, result) if str(t) not in sorts]
            for t in bad:
                self._diag("UnknownSort", f"{t} is not a sort", t)
            if not bad:
                ops[str(op)] = Arity(tuple(map(str, word)), str(result))
        return Signature(sorts, ops), {}

    def _load_algebra(self, node: Node):
        sig = self._ref(node.parts["sig"], "signature").value
        before = len(self.diagnostics)
        carriers: Dict[str, List[str]] = {}
        for sort_tok, elems in node.parts["carriers"]:
            try:
                s = self._sort(sort_tok)
            except _Skip:
                continue
            if s in carriers:
                self._diag("Carrier", f"Carrier of {s} is given twice", sort_tok)
                continue
            carriers[s] = []
            for tok in elems:
                if str(tok) in carriers[s]:
                    self._diag("Carrier", f"{tok} appears twice in the carrier of {s}", tok)
                else:
                    carriers[s].append(str(tok))
        carrier = SortedSet(sig.sorts, carriers)
        tables: Dict[str, Dict[Tuple[str, ...], str]] = {op: {} for op in sig.ops}
        for op_tok, args, result in node.parts["tables"]:
            op = str(op_tok)
            if op not in sig.ops:
                self._diag("UnknownOp", f"No operation {op} in the signature", op_tok)
                continue
            arity = sig.ops[op]
            if len(args) != len(arity.word):
                self._diag("Arity", f"{op} takes {len(arity.word)} argument(s), got {len(args)}", op_tok)
                continue
            ok = True
            for s, tok in zip(arity.word, args):
                if not carrier.contains(s, str(tok)):
                    self._diag("Domain", f"{tok} is not in the carrier of {s}", tok)
                    ok = False
            if not carrier.contains(arity.result, str(result)):
                self._diag("Codomain", f"{result} is not in the carrier of {arity.result}", result)
                ok = False
            key = tuple(map(str, args))
            if ok and key in tables[op]:
                self._diag("Duplicate", f"{op}({','.join(key)}) is defined twice", op_tok)
                ok = False
            if ok:
                tables[op][key] = str(result)
        self._abandon_if_reported(before)
        A = Algebra(sig, carrier, tables)
        self._defects(validate_algebra(A), node, str(node.name))
        return A, {"sig": str(node.parts["sig"])}

    def _load_hom(self, node: Node):
        src = self._ref(node.parts["source"], "algebra").value
        tgt = self._ref(node.parts["target"], "algebra").value
        if src.sig != tgt.sig:
            self._diag("SignatureMismatch", "Source and target have different signatures", node)
            raise _Skip()
        before = len(self.diagnostics)
        tables: Dict[str, Dict[str, str]] = {}
        for sort_tok, pairs in node.parts["lines"]:
            try:
                s = self._sort(sort_tok)
            except _Skip:
                continue
            table = tables.setdefault(s, {})
            for x, y in pairs:
                if not src.carrier.contains(s, str(x)):
                    self._diag("Domain", f"{x} is not in the source carrier of {s}", x)
                elif not tgt.carrier.contains(s, str(y)):
                    self._diag("Codomain", f"{y} is not in the target carrier of {s}", y)
                elif str(x) in table:
                    self._diag("Duplicate", f"{x} is mapped twice at sort {s}", x)
                else:
                    table[str(x)] = str(y)
        self._abandon_if_reported(before)
        for s in src.sorts:
            missing = [x for x in src.carrier.carrier(s) if x not in tables.get(s, {})]
            if missing:
                self._diag("Totality", f"No image for {', '.join(missing)} at sort {s}", node)
        self._abandon_if_reported(before)
        mapping = SortedMapping(src.carrier, tgt.carrier, tables)
        return Homomorphism(src, tgt, mapping), {"source": str(node.parts["source"]),
                                                 "target": str(node.parts["target"])}

    def _load_preorder(self, node: Node):
        before = len(self.diagnostics)
        elems = []
        for tok in node.parts["elems"]:
            if str(tok) in elems:
                self._diag("DuplicateName", f"{tok} is listed twice", tok, str(tok))
            else:
                elems.append(str(tok))
        pairs = []
        for a, b in node.parts["le"]:
            for tok in (a, b):
                if str(tok) not in elems:
                    self._diag("UnknownElement", f"{tok} is not an element of {node.name}", tok)
            pairs.append((str(a), str(b)))
        self._abandon_if_reported(before)
        return Preorder.generated(elems, pairs), {"le": pairs}

    def _index_table(self, node: Node, index: Preorder, lines, kinds: Tuple[str, ...]) -> Dict[str, Declaration]:
        """``at i = name;`` lines covering every index"""
        found: Dict[str, Declaration] = {}
        before = len(self.diagnostics)
        unresolved = False
        for i_tok, ref_tok in lines:
            i = str(i_tok)
            if i not in index.position:
                self._diag("UnknownElement", f"{i} is not an index", i_tok)
                continue
            if i in found:
                self._diag("Duplicate", f"Index {i} is assigned twice", i_tok)
                continue
            try:
                found[i] = self._ref(ref_tok, *kinds)
            except _Skip:
                unresolved = True
        self._abandon_if_reported(before)
        if unresolved:
            raise _Skip()
        missing = [i for i in index.elems if i not in found]
        if missing:
            self._diag("Missing", f"No entry for index {', '.join(missing)}", node)
            raise _Skip()
        return found

    def _same_signature(self, node: Node, algebras: Mapping[str, Algebra]) -> None:
        if len({A.sig for A in algebras.values()}) > 1:
            self._diag("SignatureMismatch", "Members use different signatures", node)
            raise _Skip()

    def _load_projsys(self, node: Node):
        return self._load_system(node, ProjectiveSystem, validate_projective_system)

    def _load_indsys(self, node: Node):
        return self._load_system(node, InductiveSystem, validate_inductive_system)

    def _load_system(self, node: Node, cls, validate):
        index = self._ref(node.parts["over"], "preorder").value
        at = self._index_table(node, index, node.parts["at"], ("algebra",))
        algebras = {i: d.value for i, d in at.items()}
        self._same_signature(node, algebras)
        # declared maps go from the algebra at a to the algebra at b
        generators: Dict[Tuple[str, str], SortedMapping] = {}
        before = len(self.diagnostics)
        unresolved = False
        for a_tok, b_tok, h_tok in node.parts["maps"]:
            a, b = str(a_tok), str(b_tok)
            if a not in index.position or b not in index.position:
                bad = a_tok if a not in index.position else b_tok
                self._diag("UnknownElement", f"{bad} is not an index", bad)
                continue
            ordered = index.leq(a, b) if cls.covariant else index.leq(b, a)
            if not ordered:
                self._diag("Direction", f"map {a} -> {b} goes against the order", a_tok)
                continue
            try:
                h = self._ref(h_tok, "hom").value
            except _Skip:
                unresolved = True
                continue
            if h.source != algebras[a] or h.target != algebras[b]:
                self._diag("CarrierMismatch", f"{h_tok} does not go from the algebra at {a} to the one at {b}", h_tok)
                continue
            if (a, b) in generators and generators[(a, b)] != h.map:
                self._diag("Coherence", f"Two different maps declared for {a} -> {b}", a_tok)
                continue
            generators[(a, b)] = h.map
        self._abandon_if_reported(before)
        if unresolved:
            raise _Skip()
        closed = self._close(node, index, algebras, generators)
        transitions = {}
        for i, j in index.le:
            key = (i, j) if cls.covariant else (j, i)
            if key not in closed:
                self._diag("Missing", f"No transition for {i} ≤ {j}", node)
                raise _Skip()
            transitions[(i, j)] = closed[key]
        system = cls(index, algebras, transitions)
        self._defects(validate(system), node, str(node.name))
        refs = {"over": str(node.parts["over"]),
                "at": {i: d.name for i, d in at.items()},
                "maps": [(str(a), str(b), str(h)) for a, b, h in node.parts["maps"]]}
        return system, refs

    def _close(self, node: Node, index: Preorder, algebras: Mapping[str, Algebra],
               generators: Dict[Tuple[str, str], SortedMapping]) -> Dict[Tuple[str, str], SortedMapping]:
        """Closure of the declared maps and identities under composition; composites must agree"""
        closed = {(i, i): SortedMapping.identity(algebras[i].carrier) for i in index.elems}
        for key, m in generators.items():
            if key in closed and closed[key] != m:
                self._diag("Coherence", f"Map declared at {key[0]} -> {key[1]} is not the identity", node)
                raise _Skip()
            closed[key] = m
        changed = True
        while changed:
            changed = False
            for (a, b), f in list(closed.items()):
                for (b2, c), g in list(closed.items()):
                    if b2 != b:
                        continue
                    h = compose(g, f)
                    if (a, c) not in closed:
                        closed[(a, c)] = h
                        changed = True
                    elif closed[(a, c)] != h:
                        self._diag("Coherence", f"Composites {a} -> {b} -> {c} and {a} -> {c} disagree", node)
                        raise _Skip()
        return closed

    def _load_ultrafilter(self, node: Node):
        index = self._ref(node.parts["on"], "preorder").value
        point = node.parts["points"][0]
        if str(point) not in index.position:
            self._diag("UnknownElement", f"{point} is not an index", point)
            raise _Skip()
        return Ultrafilter.principal(index.elems, str(point)), {"on": str(node.parts["on"]),
                                                                "points": [str(point)]}

    def _load_filter(self, node: Node):
        index = self._ref(node.parts["on"], "preorder").value
        refs = {"on": str(node.parts["on"]), "form": node.parts["form"]}
        if node.parts["form"] == "finalsections":
            return frechet_filter(index), refs
        before = len(self.diagnostics)
        points = []
        for tok in node.parts["points"]:
            if str(tok) not in index.position:
                self._diag("UnknownElement", f"{tok} is not an index", tok)
            elif str(tok) not in points:
                points.append(str(tok))
        self._abandon_if_reported(before)
        refs["points"] = points
        return principal_filter(index.elems, points), refs

    def _load_family(self, node: Node):
        index = self._ref(node.parts["on"], "preorder").value
        at = self._index_table(node, index, node.parts["at"], ("algebra",))
        algebras = {i: at[i].value for i in index.elems}
        self._same_signature(node, algebras)
        return algebras, {"on": str(node.parts["on"]), "at": {i: d.name for i, d in at.items()}}

    def _load_sysmap(self, node: Node):
        src = self._ref(node.parts["source"], "projsys").value
        tgt = self._ref(node.parts["target"], "projsys").value
        if src.index != tgt.index:
            self._diag("IndexMismatch", "Systems live over different preorders", node)
            raise _Skip()
        at = self._index_table(node, src.index, node.parts["at"], ("hom",))
        homs = system_morphism(src, tgt, {i: d.value for i, d in at.items()})
        return homs, {"source": str(node.parts["source"]), "target": str(node.parts["target"]),
                      "at": {i: d.name for i, d in at.items()}}

    def _load_isomap(self, node: Node):
        src = self._ref(node.parts["source"], "preorder").value
        tgt = self._ref(node.parts["target"], "preorder").value
        before = len(self.diagnostics)
        table = {}
        for i_tok, p_tok in node.parts["at"]:
            if str(i_tok) not in src.position:
                self._diag("UnknownElement", f"{i_tok} is not an element of {node.parts['source']}", i_tok)
            elif str(p_tok) not in tgt.position:
                self._diag("UnknownElement", f"{p_tok} is not an element of {node.parts['target']}", p_tok)
            elif str(i_tok) in table:
                self._diag("Duplicate", f"{i_tok} is mapped twice", i_tok)
            else:
                table[str(i_tok)] = str(p_tok)
        self._abandon_if_reported(before)
        return IsotoneMap(src, tgt, table), {"source": str(node.parts["source"]),
                                             "target": str(node.parts["target"])}


def parse(text: str) -> InstanceFile:
    """Parse and validate an instance file

    Raises ``ParseError`` on syntax errors, ``ResolveError`` when a name
    cannot be resolved and ``ValidationFailed`` when a declaration breaks
    its validator; each carries located diagnostics.
    """
    try:
        tree = get_parser().parse(text)
    except UnexpectedInput as e:
        diag = _syntax_diagnostic(e, text)
        raise ParseError(diag.message, [diag]) from None
    nodes = InstanceTransformer().transform(tree)
    loader = InstanceLoader()
    instance = loader.load(nodes)
    if loader.diagnostics:
        diags = sorted(loader.diagnostics, key=lambda d: (d.line, d.column))
        first = diags[0]
        if any(d.code in RESOLVE_CODES for d in diags):
            raise ResolveError(first.message, diags)
        raise ValidationFailed(first.message, diags)
    loader.logger.debug("instance loaded", extra={"nodes": len(instance)})
    return instance


def parse_file(path: Union[str, Path]) -> InstanceFile:
    return parse(Path(path).read_text(encoding="utf-8"))


def _names(xs) -> str:
    return " ".join(xs)


def _braced(xs) -> str:
    return "{ " + "".join(f"{x} " for x in xs) + "}"


def _serialize_one(d: Declaration) -> List[str]:
    v, refs = d.value, d.refs
    if d.kind == "signature":
        lines = [f"signature {d.name} {{"]
        lines += [f"  op {op} : {_names(ar.word + ('->', ar.result))};" for op, ar in v.ops.items()]
        return lines + ["}"]
    if d.kind == "algebra":
        lines = [f"algebra {d.name} over {refs['sig']} {{"]
        lines += [f"  carrier {s} = {_braced(v.carrier.carrier(s))};" for s in v.sorts]
        for op in v.sig.ops:
            for args in canonical_sorted(v.tables[op]):
                lines.append(f"  op {op}({', '.join(args)}) = {v.tables[op][args]};")
        return lines + ["}"]
    if d.kind == "hom":
        lines = [f"hom {d.name} : {refs['source']} -> {refs['target']} {{"]
        for s in v.source.sorts:
            pairs = [f"{x} -> {y}" for x, y in v.map.tables[s].items()]
            if pairs:
                lines.append(f"  {s}: {', '.join(pairs)};")
        return lines + ["}"]
    if d.kind == "preorder":
        lines = [f"preorder {d.name} {{", f"  elems {_names(v.elems)};"]
        lines += [f"  le {a} {b};" for a, b in refs["le"]]
        return lines + ["}"]
    if d.kind in ("projsys", "indsys"):
        lines = [f"{d.kind} {d.name} over {refs['over']} {{"]
        lines += [f"  at {i} = {refs['at'][i]};" for i in canonical_sorted(refs["at"])]
        lines += [f"  map {a} -> {b} = {h};" for a, b, h in refs["maps"]]
        return lines + ["}"]
    if d.kind == "ultrafilter":
        return [f"ultrafilter {d.name} on {refs['on']} = principal {refs['points'][0]};"]
    if d.kind == "filter":
        if refs["form"] == "finalsections":
            return [f"filter {d.name} on {refs['on']} = finalsections;"]
        return [f"filter {d.name} on {refs['on']} = principal {_braced(refs['points'])};"]
    if d.kind == "family":
        lines = [f"family {d.name} on {refs['on']} {{"]
        lines += [f"  at {i} = {refs['at'][i]};" for i in canonical_sorted(refs["at"])]
        return lines + ["}"]
    if d.kind == "sysmap":
        lines = [f"sysmap {d.name} : {refs['source']} -> {refs['target']} {{"]
        lines += [f"  at {i} = {refs['at'][i]};" for i in canonical_sorted(refs["at"])]
        return lines + ["}"]
    if d.kind == "isomap":
        lines = [f"isomap {d.name} : {refs['source']} -> {refs['target']} {{"]
        lines += [f"  at {i} = {p};" for i, p in v.table.items()]
        return lines + ["}"]
    raise ValueError(f"Unknown declaration kind {d.kind}")


def serialize(instance: InstanceFile) -> str:
    """Canonical text; ``parse(serialize(x)) == x`` for every loaded file"""
    blocks = []
    if instance.sorts:
        blocks.append([f"sorts {_names(instance.sorts)};"])
    for d in instance.declarations:
        blocks.append(_serialize_one(d))
    return "\n\n".join("\n".join(b) for b in blocks) + ("\n" if blocks else "")
