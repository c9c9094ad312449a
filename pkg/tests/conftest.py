import shutil

import pytest

from tecollapse.cli import main


@pytest.fixture(scope="session")
def demo_workspace(tmp_path_factory):
    """Demo workspace with one completed sweep at ``pred.jsonl``. Read-only for tests."""
    root = tmp_path_factory.mktemp("demo")
    assert main(["--workspace", str(root), "--quiet", "init-demo", "--force"]) == 0
    assert main(["--workspace", str(root), "--quiet", "sweep",
                 "--manifest", str(root / "manifest.toml"), "--out", str(root / "pred.jsonl")]) == 0
    return root


@pytest.fixture
def demo_copy(demo_workspace, tmp_path):
    """A writable copy of the demo workspace."""
    dest = tmp_path / "ws"
    shutil.copytree(demo_workspace, dest)
    return dest


def pytest_terminal_summary(terminalreporter):
    from _fixtures import ACCEPTANCE_LINES

    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
