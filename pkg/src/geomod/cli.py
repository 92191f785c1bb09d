"""Command-line entry point.

Subcommands: validate, fill, expand, convert, build, stats, export,
locate, pick, event, script, serve.  Exit codes: 0 success, 1 user error,
2 internal error.  Diagnostics go to stderr, data to stdout or --out.
"""

from __future__ import annotations

import argparse
import json
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from . import events as ev_mod
from . import export, expr, geoquery, model, paramfill
from . import scenegraph as sg
from . import solids


class UserError(Exception):
    pass


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _write_out(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_document(path: str) -> model.GenericDocument:
    doc, warnings = model.parse_document(_read(path), source=path)
    for w in warnings:
        print(w.render(), file=sys.stderr)
    return doc


def _load_sources(args):
    """Connection config + sources from --connections and/or --params."""
    config = paramfill.ConnectionConfig()
    sources: dict[str, paramfill.ParameterSource] = {}
    if getattr(args, "connections", None):
        config = paramfill.parse_connections(_read(args.connections))
        sources = paramfill.open_sources(config)
    if getattr(args, "params", None):
        # a bare parameter file answers every connection name
        src = paramfill.FileParameterSource(args.params)

        class _Everywhere(dict):
            def __contains__(self, key):
                return True

            def __getitem__(self, key):
                return paramfill.SourceSpec("file", args.params)

        config = paramfill.ConnectionConfig(_Everywhere())

        class _AllSources(dict):
            def __contains__(self, key):
                return True

            def __getitem__(self, key):
                return src

        sources = _AllSources()
    return config, sources


def _build_options(args) -> sg.BuildOptions:
    return sg.BuildOptions(
        graphical=getattr(args, "graphical", True),
        optimization=getattr(args, "opt", 1),
        quality=getattr(args, "quality", 3),
        interactivity=getattr(args, "inter", 0),
    )


def _prepare_document(path: str, args) -> model.GenericDocument:
    doc = _load_document(path)
    if doc.unresolved_params:
        config, sources = _load_sources(args)
        doc = paramfill.fill(doc, config, sources)
    doc = expr.expand_document(doc)
    doc = model.expand_placements(doc)
    diags = model.validate(doc)
    errors = [d for d in diags if d.severity == "ERROR"]
    for d in diags:
        print(d.render(), file=sys.stderr)
    if errors:
        raise UserError("document does not validate")
    return doc


def _compile(path: str, args) -> sg.CompiledScene:
    doc = _prepare_document(path, args)
    opts = _build_options(args)
    return sg.compile_scene(sg.build(doc, opts), opts)


def _export_scene(scene: sg.CompiledScene, fmt: str) -> str:
    if fmt == "vrml":
        return export.export_vrml(scene)
    if fmt == "x3d":
        return export.export_x3d(scene)
    if fmt == "txt":
        return export.export_txt(scene)
    if fmt == "wire":
        return export.export_scene_wire(scene)
    raise UserError(f"unknown format {fmt!r}")


# ---------------------------------------------------------------------------
# subcommand implementations

def cmd_validate(args) -> int:
    doc = _load_document(args.file)
    diags = model.validate(doc)
    for d in diags:
        print(d.render(), file=sys.stderr)
    return 1 if any(d.severity == "ERROR" for d in diags) else 0


def cmd_fill(args) -> int:
    doc = _load_document(args.file)
    config, sources = _load_sources(args)
    doc = paramfill.fill(doc, config, sources)
    _write_out(model.serialize_document(doc), args.out)
    return 0


def cmd_expand(args) -> int:
    doc = _load_document(args.file)
    if doc.unresolved_params:
        config, sources = _load_sources(args)
        doc = paramfill.fill(doc, config, sources)
    doc = expr.expand_document(doc)
    doc = model.expand_placements(doc)
    doc.version = "v4"
    _write_out(model.serialize_document(doc), args.out)
    return 0


def cmd_convert(args) -> int:
    doc = _load_document(args.file)
    if args.to == "v4":
        config, sources = _load_sources(args)
        doc = export.convert_v6_to_v4(doc, config, sources)
    else:
        doc = export.convert_v4_to_v6(doc)
    _write_out(model.serialize_document(doc), args.out)
    return 0


def cmd_build(args) -> int:
    scene = _compile(args.file, args)
    if args.stats:
        print(scene.stats.render())
    return 0


def cmd_stats(args) -> int:
    scene = _compile(args.file, args)
    print(scene.stats.render())
    return 0


def cmd_export(args) -> int:
    scene = _compile(args.file, args)
    _write_out(_export_scene(scene, args.format), args.out)
    return 0


def cmd_locate(args) -> int:
    scene = _compile(args.file, args)
    path = geoquery.locate(scene, (args.x, args.y, args.z))
    print("/".join(path) if path else "OUTSIDE")
    return 0


def cmd_pick(args) -> int:
    scene = _compile(args.file, args)
    hit = geoquery.pick(scene, geoquery.Ray((args.ox, args.oy, args.oz),
                                            (args.dx, args.dy, args.dz)))
    if hit is None:
        print("MISS")
    else:
        print(f"{'/'.join(hit.path)} t={hit.t:.9g} "
              f"point={hit.point[0]:.9g},{hit.point[1]:.9g},{hit.point[2]:.9g}")
    return 0


def cmd_event(args) -> int:
    ev, warnings = ev_mod.parse_event(_read(args.file))
    for w in warnings:
        print(f"WARNING {args.file}: {w}", file=sys.stderr)
    ev_opts = ev_mod.EventOptions(pt_cut=args.ptcut, bz=args.bz,
                                  hit_style="sphere" if args.sphere_hits else "point",
                                  hit_radius=args.sphere_hits or 5.0)
    opts = _build_options(args)
    root = ev_mod.build_event_scene(ev, ev_opts, opts)
    scene = sg.compile_scene(root, opts)
    if args.format:
        _write_out(_export_scene(scene, args.format), args.out)
    else:
        print(scene.stats.render())
    return 0


# ---------------------------------------------------------------------------
# batch scripts

class ScriptContext:
    """One accumulating scene context for a batch command script."""

    def __init__(self):
        self.quality = 3
        self.optimization = 1
        self.interactivity = 0
        self.palette = "DEFAULT"
        self.event_opts = ev_mod.EventOptions()
        self.roots: list = []
        self.builder: sg.SceneBuilder | None = None
        self.scene: sg.CompiledScene | None = None

    def build_options(self) -> sg.BuildOptions:
        return sg.BuildOptions(optimization=self.optimization, quality=self.quality,
                               interactivity=self.interactivity, palette=self.palette)

    def _ensure_builder(self) -> sg.SceneBuilder:
        if self.builder is None:
            self.builder = sg.SceneBuilder(self.build_options())
        return self.builder

    def show(self, path: str):
        text = _read(path)
        builder = self._ensure_builder()
        if "<event" in text.split(">", 1)[0] + ">":
            ev, _ = ev_mod.parse_event(text)
            opts = replace_palette(self.event_opts, self.palette)
            root = ev_mod.build_event_scene(ev, opts, builder.opts, builder)
        else:
            doc, _ = model.parse_document(text, source=path)
            doc = expr.expand_document(doc)
            doc = model.expand_placements(doc)
            root = sg.build(doc, builder.opts, builder)
        self.roots.append(root)
        self.scene = None

    def compiled(self) -> sg.CompiledScene:
        if self.scene is None:
            if not self.roots:
                raise UserError("no scene loaded (use: show FILE)")
            if len(self.roots) == 1:
                root = self.roots[0]
            else:
                root = sg.GroupNode("scene", list(self.roots))
                root.builder = self.builder
            self.scene = sg.compile_scene(root, self.builder.opts)
        return self.scene


def replace_palette(opts: ev_mod.EventOptions, palette: str) -> ev_mod.EventOptions:
    from dataclasses import replace
    return replace(opts, palette=palette)


def run_script(path: str) -> ScriptContext:
    """Execute a line-oriented command script against one scene context.

    Commands: quality N | optimization N | interactivity N | palette NAME |
    ptcut V | hit-style point|sphere [R] | color-mode collection|kine |
    show FILE | export FORMAT OUT | stats
    """
    from dataclasses import replace
    ctx = ScriptContext()
    for lineno, raw in enumerate(_read(path).splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        cmd, rest = parts[0], parts[1:]
        try:
            if cmd == "quality":
                ctx.quality = int(rest[0])
            elif cmd == "optimization":
                ctx.optimization = int(rest[0])
            elif cmd == "interactivity":
                ctx.interactivity = int(rest[0])
            elif cmd == "palette":
                ctx.palette = rest[0]
            elif cmd == "ptcut":
                ctx.event_opts = replace(ctx.event_opts, pt_cut=float(rest[0]))
            elif cmd == "hit-style":
                if rest[0] == "sphere":
                    ctx.event_opts = replace(ctx.event_opts, hit_style="sphere",
                                             hit_radius=float(rest[1]) if len(rest) > 1 else 5.0)
                elif rest[0] == "point":
                    ctx.event_opts = replace(ctx.event_opts, hit_style="point")
                else:
                    raise UserError(f"hit-style must be point or sphere, got {rest[0]!r}")
            elif cmd == "color-mode":
                mode = {"collection": "by-collection", "kine": "from-kine"}.get(rest[0])
                if mode is None:
                    raise UserError(f"color-mode must be collection or kine, got {rest[0]!r}")
                ctx.event_opts = replace(ctx.event_opts, color_mode=mode)
            elif cmd == "show":
                ctx.show(rest[0])
            elif cmd == "export":
                _write_out(_export_scene(ctx.compiled(), rest[0]), rest[1])
            elif cmd == "stats":
                print(ctx.compiled().stats.render())
            else:
                raise UserError(f"unknown command {cmd!r}")
        except (IndexError, ValueError) as exc:
            raise UserError(f"{path}:{lineno}: bad arguments for {cmd!r}: {exc}") from exc
        except UserError as exc:
            raise UserError(f"{path}:{lineno}: {exc}") from exc
    return ctx


def cmd_script(args) -> int:
    ctx = run_script(args.file)
    if args.serve:
        serve(ctx.compiled(), args.serve)
    return 0


# ---------------------------------------------------------------------------
# HTTP serve mode

def make_server(scene: sg.CompiledScene, host: str, port: int) -> ThreadingHTTPServer:
    lock = threading.Lock()  # mutating POSTs serialize; GETs snapshot under it

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *a):
            pass

        def _send(self, code: int, payload: dict | str):
            body = (json.dumps(payload) if not isinstance(payload, str) else payload).encode()
            self.send_response(code)
            self.send_header("Content-Type", "application/json")
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _refused(self, reason: str):
            self._send(409, {"refused": True, "reason": reason})

        def _body(self) -> dict:
            length = int(self.headers.get("Content-Length", 0))
            return json.loads(self.rfile.read(length) or b"{}")

        def do_GET(self):
            from urllib.parse import parse_qs, urlparse
            url = urlparse(self.path)
            with lock:
                if url.path == "/scene":
                    self._send(200, export.export_scene_wire(scene))
                elif url.path == "/tree":
                    self._send(200, export._build_tree(scene))
                elif url.path == "/info":
                    q = parse_qs(url.query)
                    path = tuple((q.get("path") or [""])[0].split("/"))
                    idx = scene.instance_index(path)
                    if idx is None:
                        self._send(404, {"error": f"unknown path {'/'.join(path)}"})
                        return
                    self._send(200, _volume_info(scene, idx))
                else:
                    self._send(404, {"error": "unknown endpoint"})

        def do_POST(self):
            try:
                body = self._body()
            except json.JSONDecodeError as exc:
                self._send(400, {"error": f"bad JSON: {exc}"})
                return
            with lock:
                try:
                    if self.path == "/pick":
                        ray = geoquery.Ray(tuple(body["origin"]), tuple(body["direction"]))
                        hit = geoquery.pick(scene, ray)
                        self._send(200, {"hit": None} if hit is None else
                                   {"hit": {"path": list(hit.path), "t": hit.t,
                                            "point": list(hit.point)}})
                    elif self.path == "/locate":
                        path = geoquery.locate(scene, tuple(body["point"]))
                        self._send(200, {"path": None if path is None else list(path)})
                    elif self.path == "/appearance":
                        scene.set_appearance(tuple(body["path"]),
                                             color=body.get("color"),
                                             transparency=body.get("transparency"),
                                             mode=body.get("mode"),
                                             visible=body.get("visible"))
                        self._send(200, {"ok": True})
                    elif self.path == "/visibility":
                        scene.toggle_visibility(tuple(body["path"]), bool(body["flag"]))
                        self._send(200, {"ok": True})
                    else:
                        self._send(404, {"error": "unknown endpoint"})
                except sg.CapabilityError as exc:
                    self._refused(str(exc))
                except KeyError as exc:
                    self._send(404, {"error": str(exc)})

    return ThreadingHTTPServer((host, port), Handler)


def _volume_info(scene: sg.CompiledScene, idx: int) -> dict:
    inst = scene.instances[idx]
    shape = scene.shape_of(idx)
    lo, hi = scene.instance_bounds[idx]
    info: dict = {
        "path": list(inst.path),
        "aabb": {"min": [float(v) for v in lo], "max": [float(v) for v in hi]},
        "triangles": scene.mesh_of(idx).ntriangles,
        "visible": inst.visible,
    }
    if shape is not None:
        info["solid"] = {
            "kind": model.SHAPE_KINDS[type(shape)],
            "params": {f: float(getattr(shape, f))
                       for f in type(shape).__dataclass_fields__ if f != "zplanes"},
            "volume_mm3": solids.analytic_volume(shape),
        }
        if isinstance(shape, model.Polycone):
            info["solid"]["params"]["zplanes"] = [list(map(float, p)) for p in shape.zplanes]
    else:
        info["solid"] = {"kind": "merged-batch", "params": {}}
        info["note"] = "identities discarded at this optimization level"
    return info


def serve(scene: sg.CompiledScene, address: str):
    host, _, port = address.rpartition(":")
    server = make_server(scene, host or "127.0.0.1", int(port))
    print(f"serving on http://{server.server_address[0]}:{server.server_address[1]}",
          file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


def cmd_serve(args) -> int:
    scene = _compile(args.file, args)
    serve(scene, args.serve)
    return 0


# ---------------------------------------------------------------------------
# argument parsing

def _add_build_flags(p: argparse.ArgumentParser):
    p.add_argument("--opt", type=int, default=1, help="optimization level 0..3")
    p.add_argument("--quality", type=int, default=3, help="quality level 0..9")
    p.add_argument("--inter", type=int, default=0, help="interactivity level 0..2")
    p.add_argument("--graphical", action="store_true", default=True)
    p.add_argument("--no-graphical", dest="graphical", action="store_false")


def _add_source_flags(p: argparse.ArgumentParser):
    p.add_argument("--params", help="parameter file (name value lines)")
    p.add_argument("--connections", help="connection-definition XML")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geomod",
                                     description="geometric-modeling toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="report document diagnostics")
    p.add_argument("file")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("fill", help="resolve external parameters")
    p.add_argument("file")
    _add_source_flags(p)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_fill)

    p = sub.add_parser("expand", help="fill + expand formulas and placements")
    p.add_argument("file")
    _add_source_flags(p)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_expand)

    p = sub.add_parser("convert", help="convert between v4 and v6")
    p.add_argument("file")
    p.add_argument("--to", choices=["v4", "v6"], required=True)
    _add_source_flags(p)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_convert)

    p = sub.add_parser("build", help="build a scene")
    p.add_argument("file")
    _add_build_flags(p)
    _add_source_flags(p)
    p.add_argument("--stats", action="store_true")
    p.set_defaults(fn=cmd_build)

    p = sub.add_parser("stats", help="build and print scene statistics")
    p.add_argument("file")
    _add_build_flags(p)
    _add_source_flags(p)
    p.set_defaults(fn=cmd_stats)

    p = sub.add_parser("export", help="export a scene")
    p.add_argument("file")
    p.add_argument("--format", choices=["vrml", "x3d", "txt", "wire"], required=True)
    p.add_argument("--out")
    _add_build_flags(p)
    _add_source_flags(p)
    p.set_defaults(fn=cmd_export)

    p = sub.add_parser("locate", help="point location")
    p.add_argument("file")
    _add_build_flags(p)
    _add_source_flags(p)
    p.add_argument("x", type=float)
    p.add_argument("y", type=float)
    p.add_argument("z", type=float)
    p.set_defaults(fn=cmd_locate)

    p = sub.add_parser("pick", help="ray picking")
    p.add_argument("file")
    _add_build_flags(p)
    _add_source_flags(p)
    for name in ("ox", "oy", "oz", "dx", "dy", "dz"):
        p.add_argument(name, type=float)
    p.set_defaults(fn=cmd_pick)

    p = sub.add_parser("event", help="build an event scene")
    p.add_argument("file")
    _add_build_flags(p)
    p.add_argument("--ptcut", type=float, default=0.0)
    p.add_argument("--bz", type=float, default=2.0)
    p.add_argument("--sphere-hits", type=float, default=None, metavar="RADIUS")
    p.add_argument("--format", choices=["vrml", "x3d", "txt", "wire"])
    p.add_argument("--out")
    p.set_defaults(fn=cmd_event)

    p = sub.add_parser("script", help="run a batch command script")
    p.add_argument("file")
    p.add_argument("--serve", metavar="HOST:PORT")
    p.set_defaults(fn=cmd_script)

    p = sub.add_parser("serve", help="serve a scene over HTTP")
    p.add_argument("file")
    _add_build_flags(p)
    _add_source_flags(p)
    p.add_argument("--serve", metavar="HOST:PORT", default="127.0.0.1:8787")
    p.set_defaults(fn=cmd_serve)

    return parser


def run(argv: list[str]) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (UserError, model.ModelError, expr.ExprError, paramfill.FillError,
            ev_mod.EventError, sg.BuildError, sg.CapabilityError,
            solids.SolidError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # internal error
        import traceback
        traceback.print_exc()
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
