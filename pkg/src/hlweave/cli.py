"""Command-line interface: parse, weave, run, match and dump-xml."""
from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from . import pcxpath
from .advice import AdviceError, Aspect, parse_aspect_file
from .interp import EntryError, run
from .pointcut import near_misses, scan
from .syntax import HLSyntaxError, PrintError, parse, print_source
from .weaver import ShortCircuitWarning, WeaveError, emit, pre_weave, weave

EXIT_OK, EXIT_STATIC, EXIT_RUNTIME = 0, 1, 2


class StaticError(Exception):
    """Anything that stops the pipeline before the program runs."""


@dataclass
class Config:
    aspect_files: list[str] = field(default_factory=list)
    chain_groups: list[list[str]] = field(default_factory=list)
    entry: str | None = "Main.main"
    output: str | None = None
    emit_debug_lines: bool = True

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "Config":
        groups = [g for g in (getattr(ns, "passes", None) or []) if g]
        entry = getattr(ns, "entry", "Main.main")
        if getattr(ns, "no_entry", False):
            entry = None
        return cls([f for g in groups for f in g], groups, entry,
                   getattr(ns, "output", None), not getattr(ns, "no_debug_lines", False))


class _AspectsAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        passes = getattr(namespace, "passes", None) or [[]]
        passes[-1].extend(values)
        namespace.passes = passes


class _ThenAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        passes = getattr(namespace, "passes", None) or [[]]
        passes.append([])
        namespace.passes = passes


def _read(path: str, what: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise StaticError(f"{what} not found: {path}") from None
    except OSError as exc:
        raise StaticError(f"cannot read {what} {path}: {exc.strerror}") from None


def load_program(path: str):
    return pre_weave(parse(_read(path, "source file"), path), filename=path)


def load_passes(cfg: Config) -> list[list[Aspect]]:
    return [[a for f in group for a in parse_aspect_file(_read(f, "aspect file"), f)]
            for group in cfg.chain_groups]


def woven_program(cfg: Config, source: str):
    program = load_program(source)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ShortCircuitWarning)
        for aspects in load_passes(cfg):
            program = emit(weave(program, aspects))
    for w in caught:
        if issubclass(w.category, ShortCircuitWarning):
            print(f"warning: {w.message}", file=sys.stderr)
    return program


def _write(cfg: Config, text: str) -> None:
    if cfg.output:
        Path(cfg.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _render(program, cfg: Config) -> str:
    text = print_source(program, line_comments=cfg.emit_debug_lines)
    return text + "\n" if text else text


def cmd_parse(cfg: Config, source: str) -> int:
    _write(cfg, _render(parse(_read(source, "source file"), source), cfg))
    return EXIT_OK


def cmd_weave(cfg: Config, source: str) -> int:
    _write(cfg, _render(woven_program(cfg, source), cfg))
    return EXIT_OK


def cmd_run(cfg: Config, source: str) -> int:
    program = woven_program(cfg, source)
    try:
        result = run(program, cfg.entry)
    except EntryError as exc:
        raise StaticError(str(exc)) from None
    sys.stdout.write(result.stdout)
    if result.error is not None:
        print(f"error: {result.error.message}", file=sys.stderr)
        for loc in reversed(result.error.stack):
            if loc.file:
                print(f"  at {loc.file}:{loc.line}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def match_lines(program, aspects: list[Aspect]) -> list[str]:
    lines = []
    for aspect in aspects:
        pc = aspect.pointcut
        for _, jp in scan(pc, program):
            lines.append(f"{jp.loc.file}:{jp.loc.line} {jp.kind.value} {jp.name} "
                         f"<- {aspect.name} ({pc.description})")
        for _, node in near_misses(pc, program):
            lines.append(f"{node.loc.file}:{node.loc.line} near-miss {node.children[0].atom} "
                         f"<- {aspect.name} ({pc.description}): argument types differ; "
                         f"pointcut at {aspect.file}:{aspect.line}")
    return lines


def cmd_match(cfg: Config, source: str) -> int:
    program = load_program(source)
    aspects = [a for group in load_passes(cfg) for a in group]
    _write(cfg, "".join(line + "\n" for line in match_lines(program, aspects)))
    return EXIT_OK


def cmd_dump_xml(cfg: Config, source: str) -> int:
    _write(cfg, pcxpath.dump_xml(load_program(source)))
    return EXIT_OK


COMMANDS = {
    "parse": cmd_parse, "weave": cmd_weave, "run": cmd_run, "match": cmd_match,
    "dump-xml": cmd_dump_xml,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hlweave", description="Aspect weaver for HL programs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_: str, aspects: bool = True) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_)
        p.add_argument("source", help="HL source file")
        p.add_argument("-o", "--output", help="write output to this file instead of stdout")
        if aspects:
            p.add_argument("--aspects", nargs="+", action=_AspectsAction, default=None,
                           metavar="FILE", help="aspect files (.asp), applied in order")
            p.add_argument("--then", nargs=0, action=_ThenAction,
                           help="start a new weaving pass; later passes see earlier woven code")
        return p

    p = add("parse", "parse and pretty-print a program", aspects=False)
    p.add_argument("--no-debug-lines", action="store_true", help="omit line comments")
    p = add("weave", "weave aspects and print the result")
    p.add_argument("--no-debug-lines", action="store_true", help="omit line comments")
    p = add("run", "weave aspects, then run the program")
    p.add_argument("--entry", default="Main.main", help="dotted entry function (default Main.main)")
    p.add_argument("--no-entry", action="store_true", help="only run top-level statements")
    add("match", "list the join points each aspect selects")
    add("dump-xml", "print the XML projection used by xpath pointcuts", aspects=False)
    return parser


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    cfg = Config.from_args(ns)
    try:
        return COMMANDS[ns.command](cfg, ns.source)
    except (StaticError, HLSyntaxError, AdviceError, WeaveError, PrintError,
            pcxpath.QuerySyntaxError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STATIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
