"""Walk a local git clone and materialize its history as retrospective
provenance: commits become activities, file revisions become entities,
authors become agents."""

from __future__ import annotations

import fnmatch
import subprocess
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

from . import __version__
from .errors import CorruptObject, NotARepository, UnknownBranch
from .model import (
    NodeKind,
    ProvEdge,
    ProvGraph,
    ProvNode,
    RelationKind,
    activity_id,
    agent_id,
    edge_id,
    file_id,
    revision_id,
)

_FIELD_SEP = "\x1f"
_RECORD_SEP = "\x1e"


class ChangeKind(str, Enum):
    ADDED = "Added"
    MODIFIED = "Modified"
    DELETED = "Deleted"
    RENAMED = "Renamed"


@dataclass
class FileChange:
    path: str
    kind: ChangeKind
    old_path: str | None = None  # set iff kind is RENAMED

    def __post_init__(self):
        if self.kind is ChangeKind.RENAMED:
            if not self.old_path or self.old_path == self.path:
                raise ValueError(
                    f"rename of {self.path!r} needs a distinct old path")


@dataclass
class CommitRecord:
    hash: str
    author_name: str
    author_email: str
    author_time: int              # unix epoch, UTC
    parents: list[str] = field(default_factory=list)
    changes: list[FileChange] = field(default_factory=list)
    subject: str = ""


@dataclass
class ExtractionOptions:
    branch: str | None = None          # None = repository HEAD
    include_merges: bool = True
    detect_renames: bool = True
    path_filters: list[str] | None = None
    alias_map: dict[str, str] | None = None


def canonical_identity(name: str, email: str,
                       alias_map: dict[str, str] | None = None) -> str:
    """Collapse an author signature to one identity string.

    Lowercased trimmed email when non-empty, else lowercased trimmed name;
    an alias map (old identity -> canonical identity) is applied last.
    """
    email = (email or "").strip().lower()
    identity = email if email else (name or "").strip().lower()
    if alias_map:
        identity = alias_map.get(identity, identity)
    return identity


def _run_git(repo: str | Path, *args: str) -> str:
    proc = subprocess.run(
        ["git", "-C", str(repo), *args],
        capture_output=True, text=True, encoding="utf-8", errors="replace",
    )
    if proc.returncode != 0:
        raise CorruptObject(
            f"git {' '.join(args[:2])} failed: {proc.stderr.strip()}")
    return proc.stdout


def _check_repository(repo: str | Path) -> None:
    proc = subprocess.run(
        ["git", "-C", str(repo), "rev-parse", "--git-dir"],
        capture_output=True, text=True,
    )
    if proc.returncode != 0:
        raise NotARepository(f"{repo} is not a readable git repository")


def _resolve_ref(repo: str | Path, branch: str | None) -> str:
    ref = branch if branch else "HEAD"
    proc = subprocess.run(
        ["git", "-C", str(repo), "rev-parse", "--verify", "--quiet",
         ref + "^{commit}"],
        capture_output=True, text=True,
    )
    if proc.returncode != 0:
        raise UnknownBranch(f"cannot resolve {ref!r} in {repo}")
    return proc.stdout.strip()


def _parse_name_status(blob: str) -> list[FileChange]:
    """Parse `git diff-tree -z --name-status` output into FileChanges."""
    tokens = blob.split("\0")
    changes: list[FileChange] = []
    i = 0
    while i < len(tokens):
        status = tokens[i]
        if not status:
            i += 1
            continue
        code = status[0]
        if code in ("R", "C"):
            old, new = tokens[i + 1], tokens[i + 2]
            i += 3
            if code == "R":
                changes.append(FileChange(new, ChangeKind.RENAMED, old))
            else:
                # copies only appear with -C (not enabled); treat as add
                changes.append(FileChange(new, ChangeKind.ADDED))
        else:
            path = tokens[i + 1]
            i += 2
            if code == "A":
                changes.append(FileChange(path, ChangeKind.ADDED))
            elif code == "D":
                changes.append(FileChange(path, ChangeKind.DELETED))
            else:
                # M plus rarities like T (typechange) count as modification
                changes.append(FileChange(path, ChangeKind.MODIFIED))
    return changes


def _matches_filters(change: FileChange, patterns: list[str]) -> bool:
    return any(fnmatch.fnmatchcase(change.path, p) for p in patterns)


def read_history(repo_path: str | Path,
                 options: ExtractionOptions | None = None) -> list[CommitRecord]:
    """All commits reachable from the branch, topological order, oldest
    first; changed files computed against the first parent (the empty tree
    for root commits)."""
    opts = options or ExtractionOptions()
    _check_repository(repo_path)
    tip = _resolve_ref(repo_path, opts.branch)

    fmt = (_RECORD_SEP + _FIELD_SEP.join(["%H", "%P", "%an", "%ae", "%at"])
           + _FIELD_SEP + "%s" + _FIELD_SEP)
    out = _run_git(repo_path, "log", "--topo-order", "--reverse",
                   f"--format={fmt}", tip)

    records: list[CommitRecord] = []
    for chunk in out.split(_RECORD_SEP):
        if not chunk.strip():
            continue
        fields = chunk.split(_FIELD_SEP)
        commit_hash, parents_raw, name, email, at = fields[:5]
        subject = fields[5] if len(fields) > 5 else ""
        parents = parents_raw.split() if parents_raw else []
        if len(parents) > 1 and not opts.include_merges:
            continue
        records.append(CommitRecord(
            hash=commit_hash,
            author_name=name,
            author_email=email,
            author_time=int(at),
            parents=parents,
            subject=subject,
        ))

    rename_flag = "--find-renames" if opts.detect_renames else "--no-renames"
    for rec in records:
        if rec.parents:
            args = ("diff-tree", "--no-commit-id", "-r", "-z",
                    "--name-status", rename_flag, rec.parents[0], rec.hash)
        else:
            args = ("diff-tree", "--no-commit-id", "--root", "-r", "-z",
                    "--name-status", rename_flag, rec.hash)
        changes = _parse_name_status(_run_git(repo_path, *args))
        if opts.path_filters:
            changes = [c for c in changes
                       if _matches_filters(c, opts.path_filters)]
        rec.changes = changes
    return records


def records_to_graph(records: list[CommitRecord],
                     metadata: dict[str, str] | None = None,
                     alias_map: dict[str, str] | None = None) -> ProvGraph:
    """Apply the provenance mapping to an already-read history.

    Per commit: one Activity and one WasAssociatedWith to its author's
    Agent, plus WasInformedBy to each parent Activity. Per file change: a
    revision Entity (WasGeneratedBy the Activity, WasAttributedTo the
    Agent, SpecializationOf its file Entity), and for modifications,
    deletions, and renames a Used edge to the prior revision; modifications
    and renames also add WasDerivedFrom new-revision -> prior-revision.

    Prior revisions are looked up along the first-parent chain, matching
    how the diffs were computed.
    """
    graph = ProvGraph(metadata=metadata or {})

    # last revision id per path, keyed by commit; freed once every
    # first-parent child has consumed it
    states: dict[str, dict[str, str]] = {}
    pending_children: dict[str, int] = {}
    for rec in records:
        if rec.parents:
            pending_children[rec.parents[0]] = \
                pending_children.get(rec.parents[0], 0) + 1

    def ensure_agent(rec: CommitRecord) -> str:
        identity = canonical_identity(rec.author_name, rec.author_email,
                                      alias_map)
        aid = agent_id(identity)
        if not graph.has_node(aid):
            graph.add_node(ProvNode(
                id=aid, kind=NodeKind.AGENT, label=rec.author_name,
                attributes={"identity": identity, "name": rec.author_name,
                            "email": rec.author_email}))
        return aid

    def ensure_file(path: str) -> str:
        fid = file_id(path)
        if not graph.has_node(fid):
            graph.add_node(ProvNode(
                id=fid, kind=NodeKind.ENTITY, label=path,
                attributes={"path": path}))
        return fid

    for rec in records:
        act = activity_id(rec.hash)
        when = datetime.fromtimestamp(rec.author_time, tz=timezone.utc)
        graph.add_node(ProvNode(
            id=act, kind=NodeKind.ACTIVITY, label=rec.subject,
            attributes={"hash": rec.hash, "time": when.isoformat()}))
        agent = ensure_agent(rec)
        graph.add_edge(ProvEdge(
            id=edge_id("assoc", act, agent), source=act, target=agent,
            kind=RelationKind.WAS_ASSOCIATED_WITH))
        for parent in rec.parents:
            parent_act = activity_id(parent)
            if graph.has_node(parent_act):
                graph.add_edge(ProvEdge(
                    id=edge_id("informed", act, parent_act),
                    source=act, target=parent_act,
                    kind=RelationKind.WAS_INFORMED_BY))

        first_parent = rec.parents[0] if rec.parents else None
        state = dict(states.get(first_parent, {})) if first_parent else {}

        for change in rec.changes:
            fid = ensure_file(change.path)
            rid = revision_id(change.path, rec.hash)
            graph.add_node(ProvNode(
                id=rid, kind=NodeKind.ENTITY,
                label=f"{change.path}@{rec.hash[:7]}",
                attributes={"path": change.path, "commit": rec.hash,
                            "change": change.kind.value}))
            graph.add_edge(ProvEdge(
                id=edge_id("spec", rid, fid), source=rid, target=fid,
                kind=RelationKind.SPECIALIZATION_OF))
            graph.add_edge(ProvEdge(
                id=edge_id("gen", rid, act), source=rid, target=act,
                kind=RelationKind.WAS_GENERATED_BY))
            graph.add_edge(ProvEdge(
                id=edge_id("attr", rid, agent), source=rid, target=agent,
                kind=RelationKind.WAS_ATTRIBUTED_TO))

            prior_path = (change.old_path
                          if change.kind is ChangeKind.RENAMED
                          else change.path)
            prior = state.get(prior_path)
            # prior can be missing when merges or path filters hid the
            # adding commit; the change then degrades to a plain add
            if prior and change.kind in (ChangeKind.MODIFIED,
                                         ChangeKind.DELETED,
                                         ChangeKind.RENAMED):
                graph.add_edge(ProvEdge(
                    id=edge_id("used", act, prior), source=act, target=prior,
                    kind=RelationKind.USED))
                if change.kind in (ChangeKind.MODIFIED, ChangeKind.RENAMED):
                    graph.add_edge(ProvEdge(
                        id=edge_id("deriv", rid, prior),
                        source=rid, target=prior,
                        kind=RelationKind.WAS_DERIVED_FROM))

            if change.kind is ChangeKind.DELETED:
                state.pop(change.path, None)
            elif change.kind is ChangeKind.RENAMED:
                state.pop(change.old_path, None)
                state[change.path] = rid
            else:
                state[change.path] = rid

        states[rec.hash] = state
        if first_parent is not None:
            pending_children[first_parent] -= 1
            if pending_children[first_parent] == 0:
                states.pop(first_parent, None)

    return graph


def extract(repo_path: str | Path,
            options: ExtractionOptions | None = None) -> ProvGraph:
    """Read a repository's history and return the provenance graph.

    Deterministic: an unchanged repository always yields an identical
    graph, so the metadata timestamp is the tip's committer time rather
    than the wall clock.
    """
    opts = options or ExtractionOptions()
    records = read_history(repo_path, opts)
    tip = _resolve_ref(repo_path, opts.branch)
    tip_time = _run_git(repo_path, "log", "-1", "--format=%cI", tip).strip()
    metadata = {
        "repository": Path(repo_path).resolve().name,
        "branch": opts.branch or "HEAD",
        "tip": tip,
        "extracted_at": tip_time,
        "tool": "provenir",
        "tool_version": __version__,
    }
    return records_to_graph(records, metadata, opts.alias_map)
