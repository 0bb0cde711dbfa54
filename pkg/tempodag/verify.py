"""
Fixture corpus verification
Checks that every canonical spec parses, validates, and still yields its
documented classification verdicts
"""

from pathlib import Path

from .acyclicity import classify_system
from .errors import TempoDagError
from .spec_format import load_spec

DEFAULT_FIXTURES = Path(__file__).resolve().parent.parent / "docs" / "fixtures"

# documented verdicts per fixture; keys are SystemReport verdict names
CORPUS = {
    "selection_timeline.json": {"time_acyclic": True, "effect_acyclic": False, "composite_dag": True},
    "mixing_product.json": {"time_acyclic": False, "composite_dag": False},
    "mixing_restricted.json": {"time_acyclic": True, "composite_dag": True},
    "interleaved_means.json": {"time_acyclic": False, "effect_acyclic": True, "composite_dag": True},
    "interleaved_means_feedback.json": {"effect_acyclic": False, "composite_dag": False},
    "mean_cycle.json": {"composite_dag": False},
    "averaged_mediator.json": {"time_acyclic": True, "composite_dag": True},
    "chain_faithful.json": {"time_acyclic": True, "composite_dag": True},
    "independent_triple.json": {"time_acyclic": True, "composite_dag": True},
}


def print_header(title, out):
    """Print a formatted header"""
    out("\n" + "=" * 60)
    out(f"🔍 {title}")
    out("=" * 60)


def check_fixture(path, expected, out):
    """Parse, build and classify one fixture, printing a status line per check"""
    try:
        document = load_spec(path)
        system, _ = document.build()
    except TempoDagError as error:
        out(f"❌ {path.name}: {error}")
        return False
    out(f"✅ {path.name}: parses and validates ({len(system.variables)} variables)")

    verdicts = classify_system(system).verdicts
    ok = True
    for key, value in expected.items():
        if verdicts[key] == value:
            out(f"✅ {path.name}: {key} = {value}")
        else:
            out(f"❌ {path.name}: {key} = {verdicts[key]}, documented {value}")
            ok = False
    return ok


def verify_corpus(fixtures_dir=None, out=print):
    """
    Run every fixture check

    Args:
        fixtures_dir (str or Path): Directory of canonical fixtures
        out (callable): Line printer

    Returns:
        bool: True iff every check passed
    """
    fixtures_dir = Path(fixtures_dir) if fixtures_dir else DEFAULT_FIXTURES
    print_header("FIXTURE CORPUS VERIFICATION", out)
    results = []
    for name, expected in CORPUS.items():
        path = fixtures_dir / name
        if not path.exists():
            out(f"❌ {name}: NOT FOUND in {fixtures_dir}")
            results.append((name, False))
            continue
        results.append((name, check_fixture(path, expected, out)))

    print_header("VERIFICATION SUMMARY", out)
    passed = sum(1 for _, result in results if result)
    for name, result in results:
        out(f"   {'✅ PASS' if result else '❌ FAIL'} {name}")
    out(f"\n📊 Overall Status: {passed}/{len(results)} fixtures passed")
    return passed == len(results)
