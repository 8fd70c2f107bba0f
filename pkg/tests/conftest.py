from __future__ import annotations

import pytest

from repo_factory import FIXTURE_TEAM, build_fixture_repo


@pytest.fixture(scope="session")
def fixture_repo(tmp_path_factory):
    """The bundled synthetic repository (7 commits, 4 authors, one merge,
    one rename), built once per session."""
    path = tmp_path_factory.mktemp("repos") / "fixture-repo"
    return build_fixture_repo(path)


@pytest.fixture(scope="session")
def team_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("membership") / "team.txt"
    lines = ["# project team members"] + sorted(FIXTURE_TEAM) + [""]
    path.write_text("\n".join(lines), encoding="utf-8")
    return path
