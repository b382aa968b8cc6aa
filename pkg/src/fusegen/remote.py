"""Shared HTTP plumbing for the remote scoring and fusion backends."""

from __future__ import annotations

import requests


class RemoteBackendError(RuntimeError):
    """Base for remote-backend failures; carries the endpoint."""

    def __init__(self, endpoint: str, message: str, status: int | None = None):
        self.endpoint = endpoint
        self.status = status
        detail = f"status {status}: {message}" if status is not None else message
        super().__init__(f"{endpoint}: {detail}")


class TransportError(RemoteBackendError):
    """Network-level failure: unreachable endpoint, timeout, bad HTTP status."""


class ProtocolError(RemoteBackendError):
    """The endpoint answered, but not with a conforming response."""


def post_json(endpoint: str, path: str, payload: dict, timeout: float = 60.0) -> dict:
    url = endpoint.rstrip("/") + path
    try:
        response = requests.post(url, json=payload, timeout=timeout)
    except requests.RequestException as exc:
        raise TransportError(endpoint, str(exc)) from exc
    if response.status_code != 200:
        raise TransportError(endpoint, response.text[:200], status=response.status_code)
    try:
        return response.json()
    except ValueError as exc:
        raise ProtocolError(endpoint, f"non-JSON response: {exc}") from exc
