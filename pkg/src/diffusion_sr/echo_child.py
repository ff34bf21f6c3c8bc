"""Loopback denoiser child: answers every predict frame with its input.

Run as ``python -m diffusion_sr.echo_child``. Useful for exercising the
frame protocol end to end without any model.
"""

import sys

from .protocol import serve_stream


def main() -> int:
    serve_stream(lambda tensor, t: tensor, sys.stdin.buffer, sys.stdout.buffer)
    return 0


if __name__ == "__main__":
    sys.exit(main())
