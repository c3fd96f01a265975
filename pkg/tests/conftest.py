from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    # echo the per-criterion verdicts even when output capture is on
    import sys

    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance") and getattr(mod, "LINES", None):
            terminalreporter.section("acceptance criteria")
            for line in mod.LINES:
                terminalreporter.write_line(line)
