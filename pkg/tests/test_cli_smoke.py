from conftest import assert_ok


def test_help_shows_usage(run_cli):
    res = run_cli("--help")
    assert_ok(res)
    assert "usage:" in res.stdout.lower()
    for cmd in ("analyze", "find-blocks", "trapdoor", "field"):
        assert cmd in res.stdout


def test_version_flag(run_cli):
    # Top-level --version flag should be passed directly
    res = run_cli("--version")
    assert_ok(res)
    assert "blocksys" in res.stdout.lower()


def test_unknown_command_is_an_error(run_cli):
    res = run_cli("decrypt")
    assert_ok(res, code=1)
    assert "UsageError" in res.stderr


def test_spec_or_preset_required(run_cli):
    res = run_cli("analyze")
    assert_ok(res, code=1)
    assert "--preset" in res.stderr
