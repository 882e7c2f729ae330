from app.cli.commands import (
    estimate_frieze,
    estimate_zmc,
    heights,
    integrals,
    simulate,
    susceptibility_profile,
    verify_exact,
)

COMMANDS = [
    simulate,
    verify_exact,
    estimate_frieze,
    estimate_zmc,
    susceptibility_profile,
    integrals,
    heights,
]
