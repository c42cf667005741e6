import pathlib
import runpy

import pytest

DEMOS = sorted((pathlib.Path(__file__).parent.parent / "demos").glob("[0-9]*.py"))


def test_demos_found():
    assert len(DEMOS) >= 6


@pytest.mark.parametrize("path", DEMOS, ids=lambda p: p.stem)
def test_demo_runs(path, capsys):
    text = path.read_text()
    assert text.startswith('"""\n') and "\n====" in text.split('"""')[1]
    runpy.run_path(str(path), run_name="__main__")
    assert capsys.readouterr().out
