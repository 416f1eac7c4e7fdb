"""Code-similarity metric combining four views of a candidate/reference pair:

* token n-gram precision (BLEU-style, brevity penalty, add-one smoothing),
* keyword-weighted n-gram precision,
* syntax subtree match over parse trees,
* dataflow match over def-use edges with rename-invariant variable indices.

Components that are undefined for a pair (no dataflow edges on either side,
no parseable reference) are dropped and their weight redistributed
proportionally to the rest, so the composite is total over arbitrary input.
"""

from __future__ import annotations

import ast
import keyword as _keyword
import math
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

NGRAM_ORDER = 4
KEYWORD_WEIGHT = 5.0
DEFAULT_KEYWORDS = frozenset(_keyword.kwlist)


def load_keywords(path: str) -> frozenset[str]:
    """Keyword list file: one keyword per line, UTF-8."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip() for line in fh if line.strip())


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

class TokenKind(str, Enum):
    IDENTIFIER = "identifier"
    KEYWORD = "keyword"
    NUMBER = "number"
    STRING = "string"
    OPERATOR = "operator"
    PUNCTUATION = "punctuation"


@dataclass(frozen=True)
class Token:
    lexeme: str
    kind: TokenKind


@dataclass(frozen=True)
class TokenStream:
    tokens: tuple[Token, ...]

    def lexemes(self) -> tuple[str, ...]:
        return tuple(t.lexeme for t in self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


_TOKEN_RE = re.compile(
    r"""
    (?P<comment>\#[^\n]*)
  | (?P<string>[rRbBuUfF]{0,2}(?:'''(?:[^\\]|\\.)*?'''|\"\"\"(?:[^\\]|\\.)*?\"\"\"
        |'(?:[^'\\\n]|\\.)*'|\"(?:[^\"\\\n]|\\.)*\"))
  | (?P<number>(?:0[xXoObB][0-9a-fA-F_]+|(?:\d[\d_]*\.?[\d_]*|\.\d[\d_]*)
        (?:[eE][+-]?\d+)?[jJ]?))
  | (?P<identifier>[A-Za-z_]\w*)
  | (?P<operator>\*\*=|//=|>>=|<<=|!=|>=|<=|==|->|:=|\+=|-=|\*=|/=|%=|&=|\|=|\^=|@=
        |\*\*|//|<<|>>|[+\-*/%=<>&|^~@])
  | (?P<punctuation>[()\[\]{},:;.`\\?$!'"])
  | (?P<space>\s+)
  | (?P<other>.)
    """,
    re.VERBOSE | re.DOTALL,
)


def tokenize(source: str, keywords: frozenset[str] = DEFAULT_KEYWORDS) -> TokenStream:
    """Total lexer for the candidate-code language; comments dropped,
    unknown bytes degrade to punctuation tokens."""
    tokens: list[Token] = []
    for match in _TOKEN_RE.finditer(source):
        group = match.lastgroup
        if group in ("comment", "space"):
            continue
        lexeme = match.group()
        if group == "identifier":
            kind = TokenKind.KEYWORD if lexeme in keywords else TokenKind.IDENTIFIER
        elif group in ("string", "number", "operator"):
            kind = TokenKind(group)
        else:
            kind = TokenKind.PUNCTUATION
        tokens.append(Token(lexeme, kind))
    return TokenStream(tuple(tokens))


# ---------------------------------------------------------------------------
# N-gram components
# ---------------------------------------------------------------------------

def _ngram_counts(lexemes: Sequence[str], n: int) -> Counter:
    return Counter(tuple(lexemes[i : i + n]) for i in range(len(lexemes) - n + 1))


def _brevity_penalty(cand_len: int, ref_lens: Sequence[int]) -> float:
    # Shortest reference governs: adding a reference can then never lower
    # the penalty, keeping the metric monotone in its reference set.
    r = min(ref_lens)
    if cand_len >= r:
        return 1.0
    return math.exp(1.0 - r / cand_len)


def _precision_bleu(
    candidate: TokenStream,
    references: Sequence[TokenStream],
    max_n: int,
    weight_of,
) -> float:
    if not references:
        raise ValueError("at least one reference required")
    cand = candidate.lexemes()
    if not cand:
        return 0.0
    refs = [r.lexemes() for r in references]
    log_sum = 0.0
    orders = 0
    for n in range(1, max_n + 1):
        cand_counts = _ngram_counts(cand, n)
        if not cand_counts:
            break  # shorter orders only
        max_ref: Counter = Counter()
        for ref in refs:
            for gram, count in _ngram_counts(ref, n).items():
                if count > max_ref[gram]:
                    max_ref[gram] = count
        matched = total = 0.0
        for gram, count in cand_counts.items():
            w = weight_of(gram)
            total += w * count
            matched += w * min(count, max_ref.get(gram, 0))
        if n == 1 and matched == 0:
            return 0.0  # zero token overlap: no smoothing rescue
        # Add-one smoothing only for higher orders with zero matches, so
        # near-miss code stays distinguishable from garbage.
        p = matched / total if matched > 0 else (matched + 1.0) / (total + 1.0)
        log_sum += math.log(p)
        orders += 1
    if orders == 0:
        return 0.0
    geo = math.exp(log_sum / orders)
    return _brevity_penalty(len(cand), [len(r) for r in refs]) * geo


def ngram_bleu(
    candidate: TokenStream, references: Sequence[TokenStream], max_n: int = NGRAM_ORDER
) -> float:
    """Modified n-gram precision with geometric mean and brevity penalty;
    multi-reference clipping takes the max reference count per n-gram."""
    return _precision_bleu(candidate, references, max_n, lambda gram: 1.0)


def weighted_ngram_bleu(
    candidate: TokenStream,
    references: Sequence[TokenStream],
    keyword_weight: float = KEYWORD_WEIGHT,
    max_n: int = NGRAM_ORDER,
    keywords: frozenset[str] = DEFAULT_KEYWORDS,
) -> float:
    """As ngram_bleu, but an n-gram whose first token is a reserved keyword
    counts keyword_weight times; weights normalized within each order."""
    def weight_of(gram):
        return keyword_weight if gram[0] in keywords else 1.0

    return _precision_bleu(candidate, references, max_n, weight_of)


# ---------------------------------------------------------------------------
# Syntax component
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntaxNode:
    kind: str
    children: tuple["SyntaxNode", ...] = ()


@dataclass(frozen=True)
class SyntaxTree:
    nodes: Optional[SyntaxNode]
    parse_ok: bool


def parse_tree(source: str) -> SyntaxTree:
    try:
        module = ast.parse(source)
    except (SyntaxError, ValueError, MemoryError, RecursionError):
        return SyntaxTree(nodes=None, parse_ok=False)
    return SyntaxTree(nodes=_convert(module), parse_ok=True)


def _convert(node: ast.AST) -> SyntaxNode:
    children = tuple(_convert(c) for c in ast.iter_child_nodes(node))
    return SyntaxNode(kind=type(node).__name__, children=children)


def _height(node: SyntaxNode) -> int:
    if not node.children:
        return 1
    return 1 + max(_height(c) for c in node.children)


def _signature(node: SyntaxNode) -> tuple:
    return (node.kind, tuple(_signature(c) for c in node.children))


def _subtrees(node: SyntaxNode, min_height: int, out: list[SyntaxNode]) -> int:
    """Collect subtrees of height >= min_height; returns this node's height."""
    height = 1
    for child in node.children:
        height = max(height, 1 + _subtrees(child, min_height, out))
    if height >= min_height:
        out.append(node)
    return height


def syntax_match(candidate: SyntaxTree, references: Sequence[SyntaxTree]) -> float:
    """Fraction of candidate subtrees (height >= 2, by structural hash of
    kinds) found in any reference tree. Parse failure or zero qualifying
    subtrees degrade to 0.0 — matching is never vacuously perfect."""
    if not candidate.parse_ok or candidate.nodes is None:
        return 0.0
    cand_subtrees: list[SyntaxNode] = []
    _subtrees(candidate.nodes, 2, cand_subtrees)
    if not cand_subtrees:
        return 0.0
    ref_signatures: set[tuple] = set()
    for ref in references:
        if ref.parse_ok and ref.nodes is not None:
            ref_nodes: list[SyntaxNode] = []
            _subtrees(ref.nodes, 2, ref_nodes)
            ref_signatures.update(_signature(n) for n in ref_nodes)
    matched = sum(1 for n in cand_subtrees if _signature(n) in ref_signatures)
    return matched / len(cand_subtrees)


# ---------------------------------------------------------------------------
# Dataflow component
# ---------------------------------------------------------------------------

class Relation(str, Enum):
    COMES_FROM = "comes_from"
    COMPUTED_FROM = "computed_from"


@dataclass(frozen=True)
class DataflowGraph:
    edges: frozenset[tuple[str, str, Relation]]


def dataflow_graph(source: str) -> DataflowGraph:
    """Def-use edges from assignment statements.

    ``x = y`` yields a comes_from edge, any other RHS yields computed_from
    edges from every name read. Unparseable code yields the empty graph.
    """
    try:
        module = ast.parse(source)
    except (SyntaxError, ValueError, MemoryError, RecursionError):
        return DataflowGraph(edges=frozenset())
    edges: set[tuple[str, str, Relation]] = set()
    for node in ast.walk(module):
        targets: list[ast.expr]
        if isinstance(node, ast.Assign):
            targets, value = node.targets, node.value
        elif isinstance(node, (ast.AnnAssign, ast.AugAssign)):
            targets, value = [node.target], node.value
        else:
            continue
        if value is None:
            continue
        target_names = [
            t.id for t in targets if isinstance(t, ast.Name)
        ]
        if not target_names:
            continue
        if isinstance(value, ast.Name):
            for target in target_names:
                edges.add((target, value.id, Relation.COMES_FROM))
        else:
            used = [
                n.id
                for n in ast.walk(value)
                if isinstance(n, ast.Name) and isinstance(n.ctx, ast.Load)
            ]
            for target in target_names:
                for use in used:
                    edges.add((target, use, Relation.COMPUTED_FROM))
    return DataflowGraph(edges=frozenset(edges))


def _normalize_edges(
    source: str, graph: DataflowGraph
) -> frozenset[tuple[int, int, Relation]]:
    """Rename variables to their order of first appearance in the token
    stream, making dataflow matching rename-invariant."""
    order: dict[str, int] = {}
    for token in tokenize(source).tokens:
        if token.kind is TokenKind.IDENTIFIER and token.lexeme not in order:
            order[token.lexeme] = len(order)
    def index(name: str) -> int:
        if name not in order:
            order[name] = len(order)
        return order[name]

    return frozenset(
        (index(d), index(u), rel) for d, u, rel in sorted(
            graph.edges, key=lambda e: (e[0], e[1], e[2].value)
        )
    )


def dataflow_match(
    candidate_source: str,
    reference_sources: Sequence[str],
    candidate_graph: Optional[DataflowGraph] = None,
    reference_graphs: Optional[Sequence[DataflowGraph]] = None,
) -> Optional[float]:
    """Fraction of candidate edges present in any reference graph, with
    variables normalized to first-appearance indices. Returns None when no
    side has any edges (the component is absent)."""
    cand_graph = candidate_graph or dataflow_graph(candidate_source)
    ref_graphs = (
        list(reference_graphs)
        if reference_graphs is not None
        else [dataflow_graph(r) for r in reference_sources]
    )
    cand_edges = _normalize_edges(candidate_source, cand_graph)
    ref_edges: set[tuple[int, int, Relation]] = set()
    for src, graph in zip(reference_sources, ref_graphs):
        ref_edges.update(_normalize_edges(src, graph))
    if not cand_edges and not ref_edges:
        return None
    if not cand_edges:
        return 0.0
    matched = sum(1 for e in cand_edges if e in ref_edges)
    return matched / len(cand_edges)


# ---------------------------------------------------------------------------
# Composite
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CodeBleuWeights:
    w_ngram: float = 0.25
    w_weighted: float = 0.25
    w_syntax: float = 0.25
    w_dataflow: float = 0.25

    def __post_init__(self):
        values = (self.w_ngram, self.w_weighted, self.w_syntax, self.w_dataflow)
        if any(w < 0 for w in values):
            raise ValueError("weights must be non-negative")
        if abs(sum(values) - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")


def combine_components(
    components: dict[str, Optional[float]], weights: CodeBleuWeights
) -> float:
    """Weighted sum with absent (None) components' weight redistributed
    proportionally to the present ones."""
    named = {
        "ngram": weights.w_ngram,
        "weighted": weights.w_weighted,
        "syntax": weights.w_syntax,
        "dataflow": weights.w_dataflow,
    }
    present = {k: v for k, v in components.items() if v is not None}
    total_weight = sum(named[k] for k in present)
    if not present or total_weight <= 0:
        return 0.0
    return sum(named[k] * v for k, v in present.items()) / total_weight


def codebleu_components(
    candidate: str,
    references: Sequence[str],
    *,
    keywords: frozenset[str] = DEFAULT_KEYWORDS,
    keyword_weight: float = KEYWORD_WEIGHT,
    max_n: int = NGRAM_ORDER,
) -> dict[str, Optional[float]]:
    cand_tokens = tokenize(candidate, keywords)
    ref_tokens = [tokenize(r, keywords) for r in references]
    cand_tree = parse_tree(candidate)
    ref_trees = [parse_tree(r) for r in references]
    syntax: Optional[float]
    if not any(t.parse_ok for t in ref_trees):
        syntax = None  # no parseable reference: component absent
    else:
        syntax = syntax_match(cand_tree, ref_trees)
    return {
        "ngram": ngram_bleu(cand_tokens, ref_tokens, max_n),
        "weighted": weighted_ngram_bleu(
            cand_tokens, ref_tokens, keyword_weight, max_n, keywords
        ),
        "syntax": syntax,
        "dataflow": dataflow_match(candidate, list(references)),
    }


def codebleu(
    candidate: str,
    references: Sequence[str],
    weights: CodeBleuWeights = CodeBleuWeights(),
    *,
    keywords: frozenset[str] = DEFAULT_KEYWORDS,
    keyword_weight: float = KEYWORD_WEIGHT,
    max_n: int = NGRAM_ORDER,
) -> float:
    if not references:
        raise ValueError("at least one reference required")
    if not candidate.strip():
        return 0.0
    components = codebleu_components(
        candidate,
        references,
        keywords=keywords,
        keyword_weight=keyword_weight,
        max_n=max_n,
    )
    return combine_components(components, weights)
