"""Word-level text grammar for equation-restoration solutions.

Produces the question token stream and the ordered solution lines
(one line per reasoning step).  Lines whose first word is ``Recap``
are the recap lines; the recap toggle removes exactly those.
"""

from __future__ import annotations

from fractions import Fraction
from typing import List, Sequence, Tuple

from .ervc import (
    BackSubEvent,
    EliminateEvent,
    Equation,
    ErvcInstance,
    ErvcSolution,
    Row,
    SwapEvent,
)

Line = Tuple[bool, Tuple[str, ...]]  # (is_recap, tokens)


class ErvcQuestionError(ValueError):
    """Question token stream does not follow the fixed template."""


def _num(value) -> str:
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    return str(value)


def _k(index: int) -> str:
    return f"K_{index + 1}"


def _sym_group(symbols: Sequence[str]) -> List[str]:
    out = ["["]
    for i, s in enumerate(symbols):
        if i:
            out.append(",")
        out.append(s)
    out.append("]")
    return out


def _name_list(names: Sequence[str]) -> List[str]:
    """data_1 and data_2  /  data_1 , data_2 and data_3."""
    if len(names) == 1:
        return [names[0]]
    out: List[str] = []
    for name in names[:-1]:
        if out:
            out.append(",")
        out.append(name)
    out.extend(["and", names[-1]])
    return out


def _signed_terms(pairs: Sequence[Tuple[int, List[str]]]) -> List[str]:
    """Render coeff*thing terms with +/- joiners; leading sign stays attached."""
    out: List[str] = []
    for coeff, payload in pairs:
        if not out:
            out.append(str(coeff))
        else:
            out.append("+" if coeff >= 0 else "-")
            out.append(str(abs(coeff)))
        if payload:
            out.append("*")
            out.extend(payload)
    return out


def _row_body(row: Row) -> List[str]:
    coeffs, rhs = row
    pairs = [(c, [_k(i)]) for i, c in enumerate(coeffs) if c != 0]
    return _signed_terms(pairs) + ["=", str(rhs)]


def _row_line(label: int, row: Row) -> List[str]:
    return ["Equation", str(label), ":"] + _row_body(row)


def _template_rhs(eq: Equation, instance: ErvcInstance) -> List[str]:
    out: List[str] = []
    for i, (_, var) in enumerate(eq.terms):
        if out:
            out.append("+")
        out.extend([_k(i), "*", instance.symbol(var)])
    out.extend(["+", _k(len(eq.terms))])
    return out


def _fitted_rhs(eq: Equation, instance: ErvcInstance, coeffs: Sequence[Fraction]) -> List[str]:
    pairs = [(_num(c), [instance.symbol(v)]) for c, (_, v) in zip(coeffs, eq.terms)]
    out: List[str] = []
    for value, payload in pairs:
        if out:
            out.append("+")
        out.extend([value, "*"] + payload)
    out.extend(["+", _num(coeffs[len(eq.terms)])])
    return out


def question_tokens(instance: ErvcInstance) -> Tuple[str, ...]:
    toks: List[str] = ["Data", ":"]
    for t, point in enumerate(instance.data_points, start=1):
        toks.extend([f"data_{t}", ":"])
        for i, (name, value) in enumerate(point):
            if i:
                toks.append(",")
            toks.extend([name, "=", str(value)])
        toks.append(".")
    toks.extend(["Question", ":", "Assume", "all", "relations", "between",
                 "variables", "are", "linear", "combinations", ".", "If"])
    for i, (name, value) in enumerate(instance.query_values):
        if i:
            toks.append(",")
        toks.extend(["the", "number", "of", name, "equals", str(value)])
    toks.extend([",", "then", "what", "is", "the", "number", "of",
                 instance.target, "?", "<sep>"])
    return tuple(toks)


def parse_question(tokens: Sequence[str]) -> ErvcInstance:
    """Rebuild the instance skeleton (structure and observations, coefficients
    unknown) from a question token stream."""
    toks = list(tokens)
    if toks and toks[-1] == "<sep>":
        toks = toks[:-1]
    pos = 0

    def expect(word: str):
        nonlocal pos
        if pos >= len(toks) or toks[pos] != word:
            raise ErvcQuestionError(f"expected {word!r} at token {pos}")
        pos += 1

    expect("Data")
    expect(":")
    points = []
    while pos < len(toks) and toks[pos].startswith("data_"):
        pos += 1
        expect(":")
        row = []
        while True:
            name, eq, value = toks[pos: pos + 3]
            if eq != "=":
                raise ErvcQuestionError(f"expected '=' at token {pos + 1}")
            row.append((name, int(value)))
            pos += 3
            if toks[pos] == ",":
                pos += 1
                continue
            expect(".")
            break
        points.append(tuple(row))
    if not points:
        raise ErvcQuestionError("no data points found")

    while pos < len(toks) and toks[pos] != "If":
        pos += 1
    expect("If")
    query = []
    while toks[pos] != "then":
        if toks[pos] == ",":
            pos += 1
            continue
        _, _, _, name, _, value = toks[pos: pos + 6]
        if toks[pos + 4] != "equals":
            raise ErvcQuestionError(f"expected 'equals' at token {pos + 4}")
        query.append((name, int(value)))
        pos += 6
    expect("then")

    order = [name for name, _ in points[0]]
    known = {name for name, _ in query}
    m = len(order) - len(known)
    if m < 1 or set(order[m:]) != known:
        raise ErvcQuestionError("query variables inconsistent with data points")
    unknown_names = tuple(order[:m])
    known_names = tuple(order[m:])

    equations = []
    for j, target in enumerate(unknown_names):
        refs = list(known_names) if j == 0 else [unknown_names[j - 1]]
        equations.append(Equation(target, tuple((0, v) for v in refs), 0))

    by_name = dict(query)
    return ErvcInstance(
        known_names=known_names,
        unknown_names=unknown_names,
        equations=tuple(equations),
        data_points=tuple(points),
        query_values=tuple((name, by_name[name]) for name in known_names),
    )


def solution_lines(instance: ErvcInstance, solution: ErvcSolution) -> List[Line]:
    """Full reasoning line sequence; dropout and recap filtering happen later."""
    lines: List[Line] = []

    def line(*tokens: str):
        lines.append((False, tuple(tokens)))

    def recap(*tokens: str):
        lines.append((True, tuple(tokens)))

    line("Solution", ":")
    line("Defining", "Variables")
    line("Known", "Variables", ":")
    for name, value in instance.query_values:
        line(name, "as", instance.symbol(name), "=", str(value))
    line("Unknown", "Variables", ":")
    for name in instance.unknown_names[:-1]:
        line("Intermediate", "Variable", ":", name, "as", instance.symbol(name))
    line("Target", "Variable", ":", instance.target, "as", instance.symbol(instance.target))

    line("Restoring", "Relations")
    groups = [[instance.symbol(name) for name, _ in point] for point in instance.data_points]
    listing: List[str] = []
    for i, group in enumerate(groups):
        if i:
            listing.append(",")
        listing.extend(_sym_group(group))
    line("List", "all", "variable", "names", "in", "each", "data", "point", ":", *listing)
    line("Deduplicate", "them", ":", *_sym_group(groups[0]))
    if instance.m == 1:
        line("There", "is", "1", "distinct", "group", ",", "implying", "1",
             "distinct", "linear", "relationship", "to", "be", "determined", ".")
    else:
        line("There", "are", str(instance.m), "distinct", "linear",
             "relationships", "to", "be", "determined", ".")
    line("Examining", "each", "relationship", ":")

    for eq, solve in zip(instance.equations, solution.elimination_trace):
        j = solve.equation_index + 1
        target_sym = instance.symbol(eq.target)
        term_syms = [instance.symbol(v) for _, v in eq.terms]
        p = len(eq.terms) + 1

        line("Relation", str(j), ":")
        line("Exploring", "relation", "for", target_sym, ":")
        line("There", "are", str(p), "variables", "in", "the", "data",
             "beginning", "with", target_sym, ":", "Hence", ",", str(p),
             "coefficients", "are", "required", ",", "and", "at", "least",
             str(p), "data", "points", "are", "needed", ".")
        line("Let", "the", "coefficients", "on", "the", "right", "side", "of",
             "the", "equation", "be", *_name_list([_k(i) for i in range(p)]), ".")
        recap("Recap", "variables", ":", *_sym_group([target_sym] + term_syms))
        line("Define", "the", "equation", "of", "relation", str(j), ":")
        line(target_sym, "=", *_template_rhs(eq, instance))

        line("Using", "data", "points",
             *_name_list([f"data_{t + 1}" for t in range(p)]), ":")
        for t in range(p):
            values = dict(instance.data_points[t])
            pieces = [eq.target] + [v for _, v in eq.terms]
            row_toks: List[str] = [f"data_{t + 1}", ":"]
            for i, name in enumerate(pieces):
                if i:
                    row_toks.append(",")
                row_toks.extend([instance.symbol(name), "=", str(values[name])])
            line(*row_toks)
            eq_rhs: List[str] = []
            for i, (_, var) in enumerate(eq.terms):
                if eq_rhs:
                    eq_rhs.append("+")
                eq_rhs.extend([_k(i), "*", str(values[var])])
            eq_rhs.extend(["+", _k(len(eq.terms))])
            line("Equation", str(t + 1), ":", str(values[eq.target]), "=", *eq_rhs)

        line("Solve", "the", "system", "of", "equations", "using",
             "Gaussian", "Elimination", ":")
        line("Initialize", ":")
        for r, row in enumerate(solve.initial_rows, start=1):
            line(*_row_line(r, row))

        for event in solve.events:
            if isinstance(event, SwapEvent):
                line("Swap", "Equation", str(event.row_a + 1), "with",
                     "Equation", str(event.row_b + 1), ":")
                for r, row in enumerate(event.rows_after, start=1):
                    line(*_row_line(r, row))
            elif isinstance(event, EliminateEvent):
                line("Multiply", "Equation", str(event.pivot_row + 1), "by",
                     str(event.pivot_multiplier), "and", "subtract",
                     str(event.target_multiplier), "times", "Equation",
                     str(event.target_row + 1), ":")
                line("(", "Equation", str(event.pivot_row + 1), ")", "*",
                     str(event.pivot_multiplier), ":", *_row_body(event.scaled_pivot))
                line("(", "Equation", str(event.target_row + 1), ")", "*",
                     str(event.target_multiplier), ":", *_row_body(event.scaled_target))
                line("New", "Equation", str(event.target_row + 1), ":",
                     *_row_body(event.new_row))
                recap_toks = ["Recap", "updated", "equations", ":"]
                for r, row in enumerate(event.rows_after, start=1):
                    recap_toks.extend(_row_line(r, row))
                recap(*recap_toks)
            elif isinstance(event, BackSubEvent):
                k = _k(event.var_index)
                line("Solve", "for", k, ":")
                lhs = [str(event.coefficient), "*", k, "="]
                if event.resolved_terms:
                    symbolic = [str(event.rhs)]
                    evaluated = [str(event.rhs)]
                    for coeff, t, value in event.resolved_terms:
                        symbolic.append("-" if coeff >= 0 else "+")
                        symbolic.extend([str(abs(coeff)), "*", _k(t)])
                        product = Fraction(coeff) * value
                        evaluated.append("-" if product >= 0 else "+")
                        evaluated.append(_num(abs(product)))
                    line(*lhs, *symbolic)
                    line(*lhs, *evaluated, "=", _num(event.reduced_rhs))
                else:
                    line(*lhs, str(event.rhs))
                line(k, "=", _num(event.reduced_rhs), "/",
                     str(event.coefficient), "=", _num(event.value))

        recap("Recap", "the", "equation", ":", target_sym, "=",
              *_template_rhs(eq, instance))
        est: List[str] = []
        for i in range(p):
            if est:
                est.append(",")
            est.extend([_k(i), "=", _num(solve.coefficients[i])])
        line("Estimated", "coefficients", ":", *est)
        line("Final", "equation", ":", target_sym, "=",
             *_fitted_rhs(eq, instance, solve.coefficients))

    line("Calculation", "with", "Restored", "Relations", ":")
    values = {name: Fraction(v) for name, v in instance.query_values}
    for eq, coeffs, (target, result) in zip(
        instance.equations, solution.recovered_coefficients, solution.computed_values
    ):
        target_sym = instance.symbol(eq.target)
        line("Using", "the", "equation", target_sym, "=",
             *_fitted_rhs(eq, instance, coeffs), ":")
        known_toks: List[str] = []
        for _, var in eq.terms:
            if known_toks:
                known_toks.append(",")
            known_toks.extend([instance.symbol(var), "=", _num(values[var])])
        line("Known", "variables", ":", *known_toks)
        products = [coeffs[i] * values[v] for i, (_, v) in enumerate(eq.terms)]
        symbolic: List[str] = []
        for i, (_, var) in enumerate(eq.terms):
            if symbolic:
                symbolic.append("+")
            symbolic.extend([_num(coeffs[i]), "*", _num(values[var])])
        symbolic.extend(["+", _num(coeffs[len(eq.terms)])])
        evaluated: List[str] = []
        for prod in products:
            if evaluated:
                evaluated.append("+")
            evaluated.append(_num(prod))
        evaluated.extend(["+", _num(coeffs[len(eq.terms)])])
        line(target_sym, "=", *symbolic, "=", *evaluated, "=", _num(result))
        values[eq.target] = result

    recap("Recap", "Target", "Variable", ":", instance.target,
          "(", instance.symbol(instance.target), ")", "=",
          _num(solution.final_answer))
    line("Conclusion", ":", "The", "number", "of", instance.target,
         "equals", _num(solution.final_answer), ".")
    return lines
