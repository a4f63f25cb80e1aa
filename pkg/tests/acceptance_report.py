"""Registry for acceptance-criterion outcomes, printed in the pytest summary."""

_STATUS: dict[int, tuple[str, bool]] = {}


def start(criterion: int, description: str) -> None:
    _STATUS[criterion] = (description, False)


def ok(criterion: int) -> None:
    description, _ = _STATUS[criterion]
    _STATUS[criterion] = (description, True)
    print(f"PASS criterion {criterion}: {description}")


def lines() -> list[str]:
    out = []
    for criterion in sorted(_STATUS):
        description, passed = _STATUS[criterion]
        verdict = "PASS" if passed else "FAIL"
        out.append(f"{verdict} criterion {criterion}: {description}")
    return out
