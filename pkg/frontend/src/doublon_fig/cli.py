"""CLI: doublon-fig <figure-spec.json>

Renders one figure from a result bundle or density CSV. Exit code 0 on
success, 1 on any spec/input/schema error (message on stderr).
"""

import argparse
import sys

from .render import FigureError, load_spec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="doublon-fig",
                                     description="Render figures from doublon-ed outputs")
    parser.add_argument("spec", help="figure-spec JSON file")
    args = parser.parse_args(argv)
    try:
        out = render(load_spec(args.spec))
    except FigureError as exc:
        print(f"doublon-fig: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
