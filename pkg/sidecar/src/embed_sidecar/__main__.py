"""Run the sidecar: ``python -m embed_sidecar``.

Configuration via environment variables: SIDECAR_BACKEND (sbert | hashed),
SIDECAR_MODEL, SIDECAR_DIM (hashed backend), SIDECAR_PORT.
"""

import uvicorn

from .app import Settings, create_app


def main() -> None:
    settings = Settings.from_env()
    uvicorn.run(create_app(settings), host="127.0.0.1", port=settings.port)


if __name__ == "__main__":
    main()
