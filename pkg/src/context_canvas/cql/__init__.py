from .ast import NodePattern, PatternClause, QueryAst, RelPattern, ReturnItem, format_query
from .executor import ResultTable, execute
from .parser import ParseError, parse
from .template import character_context_query, query_by_template

__all__ = [
    "NodePattern",
    "ParseError",
    "PatternClause",
    "QueryAst",
    "RelPattern",
    "ResultTable",
    "ReturnItem",
    "character_context_query",
    "execute",
    "format_query",
    "parse",
    "query_by_template",
]
