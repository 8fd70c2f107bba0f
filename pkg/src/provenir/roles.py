"""Decide each agent's role (team member vs external contributor) from a
membership source and materialize one ContributesTo edge per (agent, file)
pair."""

from __future__ import annotations

import json
import time
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import requests

from .errors import (
    AuthError,
    GraphInvariantError,
    NetworkError,
    NotFound,
    RateLimited,
)
from .model import (
    ProvEdge,
    ProvGraph,
    RelationKind,
    edge_id,
    is_revision_entity,
)

ROLE_TEAM = "team"
ROLE_CONTRIBUTOR = "contributor"


class EmptyMembershipWarning(UserWarning):
    """A membership source yielded zero identities (valid but suspicious)."""


@dataclass(frozen=True)
class Membership:
    """The role oracle: agents resolving into `identities` are team."""

    identities: frozenset[str]
    source: str                    # "file" or "forge"
    fetched_at: str | None = None  # UTC ISO timestamp for forge fetches

    def __contains__(self, identity: str) -> bool:
        return identity in self.identities


def _canon(identity: str) -> str:
    return identity.strip().lower()


def load_membership_file(path: str | Path) -> Membership:
    """One identity per line; blank lines and '#' comments are ignored and
    identities are canonicalized (trimmed, lowercased)."""
    text = Path(path).read_text(encoding="utf-8")
    identities = set()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        identities.add(_canon(line))
    if not identities:
        warnings.warn(f"membership file {path} lists no identities",
                      EmptyMembershipWarning, stacklevel=2)
    return Membership(identities=frozenset(identities), source="file")


def save_membership(membership: Membership, path: str | Path) -> None:
    """Snapshot a membership set to JSON (with its fetched-at timestamp)."""
    data = {
        "identities": sorted(membership.identities),
        "source": membership.source,
        "fetched_at": membership.fetched_at,
    }
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def load_membership_snapshot(path: str | Path) -> Membership:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return Membership(identities=frozenset(data["identities"]),
                      source=data.get("source", "forge"),
                      fetched_at=data.get("fetched_at"))


def fetch_membership_forge(org: str, token: str,
                           base_url: str = "https://api.github.com",
                           session: requests.Session | None = None,
                           max_attempts: int = 3,
                           sleep=time.sleep) -> Membership:
    """Fetch the organization's member logins, following Link pagination
    until exhaustion. Network failures are retried with exponential backoff
    (1s, 2s) up to `max_attempts`; HTTP-level rejections are not retried.
    """
    sess = session or requests.Session()
    headers = {
        "Authorization": f"Bearer {token}",
        "Accept": "application/vnd.github+json",
    }
    url: str | None = f"{base_url.rstrip('/')}/orgs/{org}/members?per_page=100"
    identities: set[str] = set()
    while url:
        response = None
        for attempt in range(max_attempts):
            try:
                response = sess.get(url, headers=headers, timeout=30)
                break
            except requests.RequestException as exc:
                if attempt + 1 == max_attempts:
                    raise NetworkError(
                        f"forge unreachable after {max_attempts} attempts: "
                        f"{exc}") from exc
                sleep(2 ** attempt)
        assert response is not None

        if response.status_code == 429 or (
                response.status_code == 403
                and response.headers.get("X-RateLimit-Remaining") == "0"):
            reset_raw = response.headers.get("X-RateLimit-Reset")
            reset_at = int(reset_raw) if reset_raw else None
            raise RateLimited(
                f"forge rate limit exhausted (resets at {reset_at})", reset_at)
        if response.status_code in (401, 403):
            raise AuthError(
                f"forge rejected credentials (HTTP {response.status_code})")
        if response.status_code == 404:
            raise NotFound(f"organization {org!r} not found")
        if response.status_code != 200:
            raise NetworkError(
                f"unexpected forge response HTTP {response.status_code}")

        for member in response.json():
            identities.add(_canon(member["login"]))
        url = response.links.get("next", {}).get("url")

    if not identities:
        warnings.warn(f"organization {org!r} exposes no members",
                      EmptyMembershipWarning, stacklevel=2)
    fetched_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return Membership(identities=frozenset(identities), source="forge",
                      fetched_at=fetched_at)


def annotate_roles(graph: ProvGraph, membership: Membership,
                   identity_bridge: dict[str, str] | None = None) -> int:
    """Add one ContributesTo edge per (agent, file) pair where the agent
    authored at least one revision of the file; role is 'team' when the
    agent resolves into the membership set, else 'contributor'.

    Idempotent: pairs that already carry an edge are skipped, so a second
    run returns 0. Returns the number of edges added.
    """
    violations = graph.validate()
    if violations:
        raise GraphInvariantError(
            f"graph fails validation with {len(violations)} violation(s); "
            f"first: {violations[0].message}")

    bridge = {k: v for k, v in (identity_bridge or {}).items()}

    existing: set[tuple[str, str]] = set()
    for e in graph.edges():
        if e.kind is RelationKind.CONTRIBUTES_TO:
            existing.add((e.source, e.target))

    pairs: set[tuple[str, str]] = set()
    for node in graph.nodes():
        if not is_revision_entity(node):
            continue
        agents = graph.neighbors(node.id, "out",
                                 RelationKind.WAS_ATTRIBUTED_TO)
        files = graph.neighbors(node.id, "out",
                                RelationKind.SPECIALIZATION_OF)
        for a in agents:
            for f in files:
                pairs.add((a, f))

    added = 0
    for a, f in sorted(pairs):
        if (a, f) in existing:
            continue
        identity = graph.node(a).attributes.get("identity", "")
        resolved = _canon(bridge.get(identity, identity))
        role = ROLE_TEAM if resolved in membership else ROLE_CONTRIBUTOR
        graph.add_edge(ProvEdge(
            id=edge_id("contrib", a, f), source=a, target=f,
            kind=RelationKind.CONTRIBUTES_TO, attributes={"role": role}))
        added += 1
    return added
