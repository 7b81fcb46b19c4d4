"""``key=value`` report lines.

Floats are written with ``repr``, the shortest decimal that round-trips
to the same float64, so parsing a line recovers every value exactly.
"""


def _render(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    text = str(value)
    if not text or any(c.isspace() or c == "=" for c in text):
        raise ValueError(f"cannot render {value!r} in a report line")
    return text


def format_line(fields):
    return " ".join(f"{key}={_render(value)}" for key, value in fields.items())


def parse_line(line):
    """Split a report line into a dict of strings, preserving field order."""
    fields = {}
    for token in line.split():
        key, sep, value = token.partition("=")
        if not sep or not key:
            raise ValueError(f"malformed report token {token!r}")
        fields[key] = value
    return fields


def parse_bool(text):
    if text not in ("true", "false"):
        raise ValueError(f"expected true/false, got {text!r}")
    return text == "true"


def equivalence_fields(report):
    cfg = report.config
    fields = {"check": report.check, "mode": cfg.mode, "seed": cfg.seed, "T": cfg.T}
    if cfg.mode == "cross":
        fields["S"] = cfg.S
    fields.update(
        d_model=cfg.d_model,
        d_k=cfg.d_k,
        d_v=cfg.d_v,
        H=cfg.heads,
        scale=cfg.scale_variant,
        tol=float(cfg.tol),
        max_abs_diff=report.max_abs_diff,
        argmax_position=report.argmax_position,
        argmax_component=report.argmax_component,
        passed=report.passed,
    )
    return fields


def gradcheck_fields(report, cfg):
    return {
        "check": "gradcheck",
        "seed": cfg.seed,
        "T": cfg.T,
        "d_model": cfg.d_model,
        "d_k": cfg.d_k,
        "d_v": cfg.d_v,
        "H": cfg.heads,
        "eps": report.eps,
        "threshold": report.threshold,
        "n_checked": report.n_checked,
        "max_rel_err": report.max_rel_err,
        "worst": report.worst_parameter,
        "passed": report.passed,
    }
