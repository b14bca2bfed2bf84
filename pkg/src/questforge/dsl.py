"""The restricted action language agents must emit.

Surface syntax is a closed subset of Python: bare action calls with literal
arguments and ``for _ in range(N):`` loops nested at most two deep. Nothing
else: no variables, conditionals, function definitions or imports. Source is
parsed with the stdlib ``ast`` module and converted into a tiny AST that the
executor can flatten; every rejected construct becomes a structured error
with line/column, which the evaluator files under "invalid code".
"""
from __future__ import annotations

import ast
import re
import warnings
from dataclasses import dataclass, field
from typing import Union

# action name -> argument types, in order
ACTION_SIGNATURES: dict[str, tuple[type, ...]] = {
    "move": (int, int),
    "gather": (),
    "fight": (),
    "craft": (str, int),
    "equip": (str,),
    "unequip": (str,),
    "recycle": (str, int),
    "rest": (),
}

MAX_LOOP_DEPTH = 2
FLATTEN_CAP = 10_000


class PlanError(Exception):
    """Structured plan rejection: category + position, serializable for reports."""

    def __init__(self, category: str, message: str, line: int = 0, col: int = 0):
        self.category = category
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"{category} at {line}:{col}: {message}")

    def to_json(self) -> dict:
        return {"line": self.line, "col": self.col,
                "category": self.category, "message": self.message}


@dataclass(frozen=True)
class ActionCall:
    name: str
    args: tuple = ()
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ForLoop:
    count: int
    body: tuple  # of Statement
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


Statement = Union[ActionCall, ForLoop]


@dataclass(frozen=True)
class PlanProgram:
    statements: tuple = ()


_FENCE_RE = re.compile(r"```[a-zA-Z0-9_+-]*[ \t]*\r?\n(.*?)```", re.DOTALL)


def extract_code(model_output: str) -> str:
    """Last fenced code block if any, else the whole text trimmed."""
    blocks = _FENCE_RE.findall(model_output)
    if blocks:
        return blocks[-1].strip("\n")
    return model_output.strip()


_FORBIDDEN_NAMES = {
    ast.Assign: "variable assignment",
    ast.AugAssign: "variable assignment",
    ast.AnnAssign: "variable assignment",
    ast.If: "if",
    ast.While: "while",
    ast.FunctionDef: "def",
    ast.AsyncFunctionDef: "def",
    ast.ClassDef: "class",
    ast.Import: "import",
    ast.ImportFrom: "import",
    ast.Return: "return",
    ast.With: "with",
    ast.Try: "try",
    ast.Lambda: "lambda",
}


def _pos(node: ast.AST) -> tuple[int, int]:
    return getattr(node, "lineno", 0), getattr(node, "col_offset", 0)


def _literal(node: ast.expr) -> object:
    """Literal int (possibly negated) or str; anything else returns None."""
    if isinstance(node, ast.Constant) and type(node.value) in (int, str):
        return node.value
    if (isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub)
            and isinstance(node.operand, ast.Constant) and type(node.operand.value) is int):
        return -node.operand.value
    return None


def _convert_call(node: ast.Expr) -> ActionCall:
    line, col = _pos(node)
    call = node.value
    if not isinstance(call, ast.Call):
        raise PlanError("forbidden_construct", "expression statement is not an action call",
                        line, col)
    if not isinstance(call.func, ast.Name):
        raise PlanError("forbidden_construct", "only plain action calls are allowed", line, col)
    name = call.func.id
    if name not in ACTION_SIGNATURES:
        raise PlanError("unknown_action", f"unknown action '{name}'", line, col)
    if call.keywords:
        raise PlanError("arity_mismatch", f"{name}() takes no keyword arguments", line, col)
    sig = ACTION_SIGNATURES[name]
    if len(call.args) != len(sig):
        raise PlanError("arity_mismatch",
                        f"{name}() takes {len(sig)} argument(s), got {len(call.args)}",
                        line, col)
    args = []
    for idx, (arg_node, want) in enumerate(zip(call.args, sig)):
        value = _literal(arg_node)
        if value is None or type(value) is not want:
            raise PlanError("arity_mismatch",
                            f"{name}() argument {idx + 1} must be a {want.__name__} literal",
                            line, col)
        if want is int and name in ("craft", "recycle") and idx == 1 and value < 1:
            raise PlanError("arity_mismatch",
                            f"{name}() quantity must be a positive integer", line, col)
        args.append(value)
    return ActionCall(name=name, args=tuple(args), line=line, col=col)


def _convert_for(node: ast.For, depth: int) -> ForLoop:
    line, col = _pos(node)
    if depth >= MAX_LOOP_DEPTH:
        raise PlanError("nesting_depth",
                        f"loops may nest at most {MAX_LOOP_DEPTH} deep", line, col)
    if node.orelse:
        raise PlanError("forbidden_construct", "for-else", line, col)
    if not isinstance(node.target, ast.Name):
        raise PlanError("forbidden_construct", "loop target must be a bare name", line, col)
    it = node.iter
    if not (isinstance(it, ast.Call) and isinstance(it.func, ast.Name)
            and it.func.id == "range" and not it.keywords and len(it.args) == 1):
        raise PlanError("forbidden_construct",
                        "loops must use range() with a single argument", line, col)
    bound = _literal(it.args[0])
    if type(bound) is not int:
        raise PlanError("forbidden_construct", "non-literal loop bound", line, col)
    if isinstance(it.args[0], ast.Constant) and type(it.args[0].value) is bool:
        raise PlanError("forbidden_construct", "non-literal loop bound", line, col)
    if bound < 1:
        raise PlanError("forbidden_construct",
                        "loop bound must be a positive integer literal", line, col)
    body = tuple(_convert_statement(child, depth + 1) for child in node.body)
    return ForLoop(count=bound, body=body, line=line, col=col)


def _convert_statement(node: ast.stmt, depth: int) -> Statement:
    if isinstance(node, ast.Expr):
        return _convert_call(node)
    if isinstance(node, ast.For):
        return _convert_for(node, depth)
    line, col = _pos(node)
    label = _FORBIDDEN_NAMES.get(type(node), type(node).__name__.lower())
    raise PlanError("forbidden_construct", f"forbidden construct: {label}", line, col)


def parse(source: str) -> PlanProgram:
    """Parse plan source; total over arbitrary input (raises PlanError, never crashes)."""
    try:
        with warnings.catch_warnings():
            # arbitrary model output is expected here; its stylistic warnings
            # (e.g. invalid escape sequences) are not ours to surface
            warnings.simplefilter("ignore")
            tree = ast.parse(source)
    except (SyntaxError, ValueError) as exc:
        line = getattr(exc, "lineno", 0) or 0
        col = getattr(exc, "offset", 0) or 0
        raise PlanError("syntax", str(getattr(exc, "msg", exc)), line, col) from None
    except RecursionError:
        raise PlanError("syntax", "input too deeply nested", 0, 0) from None
    statements = tuple(_convert_statement(node, 0) for node in tree.body)
    return PlanProgram(statements=statements)


def statement_count(program: PlanProgram) -> int:
    """Analytic flattened length: sum of action multiplicities."""

    def count(stmts) -> int:
        total = 0
        for stmt in stmts:
            if isinstance(stmt, ActionCall):
                total += 1
            else:
                total += stmt.count * count(stmt.body)
        return total

    return count(program.statements)


def flatten(program: PlanProgram, cap: int = FLATTEN_CAP) -> list[ActionCall]:
    """Loop-unrolled action sequence in program order."""
    total = statement_count(program)
    if total > cap:
        raise PlanError("plan_too_long", f"flattened plan has {total} actions, cap is {cap}")
    out: list[ActionCall] = []

    def emit(stmts) -> None:
        for stmt in stmts:
            if isinstance(stmt, ActionCall):
                out.append(stmt)
            else:
                for _ in range(stmt.count):
                    emit(stmt.body)

    emit(program.statements)
    return out


def _render_arg(arg) -> str:
    if isinstance(arg, str):
        return f"'{arg}'"
    return str(arg)


def unparse(program: PlanProgram) -> str:
    """Canonical source: 4-space indent, single-quoted ids, loop vars i then j."""
    lines: list[str] = []

    def render(stmts, depth: int) -> None:
        pad = "    " * depth
        for stmt in stmts:
            if isinstance(stmt, ActionCall):
                lines.append(f"{pad}{stmt.name}({', '.join(_render_arg(a) for a in stmt.args)})")
            else:
                var = "ij"[depth] if depth < 2 else "k"
                lines.append(f"{pad}for {var} in range({stmt.count}):")
                render(stmt.body, depth + 1)

    render(program.statements, 0)
    return "\n".join(lines) + ("\n" if lines else "")
