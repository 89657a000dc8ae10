import os

import uvicorn

from .app import create_app


def main():
    listen = os.environ.get("SIDECAR_LISTEN", "127.0.0.1:9090")
    host, _, port = listen.rpartition(":")
    uvicorn.run(create_app(), host=host or "127.0.0.1", port=int(port))


if __name__ == "__main__":
    main()
