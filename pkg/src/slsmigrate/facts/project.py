from __future__ import annotations

import posixpath
from dataclasses import dataclass, field
from pathlib import Path

from slsmigrate.config import Config

PY_EXTS = (".py",)
JS_EXTS = (".js", ".cjs", ".mjs", ".ts", ".jsx", ".tsx")


class EmptyProjectError(Exception):
    pass


def _is_test_file(name: str) -> bool:
    return (
        name.startswith("test_")
        or name.endswith("_test.py")
        or name == "conftest.py"
        or any(name.endswith(f".{kind}{ext}") for kind in ("test", "spec") for ext in JS_EXTS)
    )


@dataclass
class Project:
    """A monolith source tree with its files keyed by project-relative posix path."""

    root: Path
    language: str
    files: list[str] = field(default_factory=list)
    _text: dict[str, str | None] = field(default_factory=dict, repr=False)

    @classmethod
    def discover(cls, root: str | Path, config: Config | None = None) -> Project:
        config = config or Config()
        root = Path(root).resolve()
        if not root.is_dir():
            raise FileNotFoundError(f"{root}: project root is not a directory")
        py: list[str] = []
        js: list[str] = []
        excluded = set(config.exclude_dirs)
        for path in root.rglob("*"):
            rel = path.relative_to(root)
            if any(part in excluded or part.startswith(".") for part in rel.parts[:-1]):
                continue
            if not path.is_file() or _is_test_file(path.name):
                continue
            relpath = rel.as_posix()
            if path.suffix in PY_EXTS:
                py.append(relpath)
            elif path.suffix in JS_EXTS and not path.name.endswith(".d.ts"):
                js.append(relpath)
        if not py and not js:
            raise EmptyProjectError(f"{root}: no Python or JavaScript/TypeScript sources found")
        language = "python" if len(py) >= len(js) else "javascript"
        files = sorted(py if language == "python" else js)
        return cls(root, language, files)

    def text(self, relpath: str) -> str | None:
        """File content, or None when it cannot be decoded as text."""
        if relpath not in self._text:
            try:
                self._text[relpath] = (self.root / relpath).read_bytes().decode("utf-8")
            except (OSError, UnicodeDecodeError):
                self._text[relpath] = None
        return self._text[relpath]

    @property
    def file_set(self) -> frozenset[str]:
        return frozenset(self.files)

    # -- module resolution -------------------------------------------------

    def resolve_python_module(self, importer: str, module: str, level: int = 0) -> str | None:
        """Project file for ``module`` as imported from ``importer``; None if external."""
        files = self.file_set
        parts = module.split(".") if module else []
        bases: list[str] = []
        if level > 0:
            base = posixpath.dirname(importer)
            for _ in range(level - 1):
                base = posixpath.dirname(base)
            bases.append(base)
        else:
            bases.append("")
            importer_dir = posixpath.dirname(importer)
            if importer_dir:
                bases.append(importer_dir)
        for base in bases:
            stem = posixpath.join(base, *parts) if parts else base
            for candidate in (f"{stem}.py", posixpath.join(stem, "__init__.py") if stem else "__init__.py"):
                candidate = posixpath.normpath(candidate)
                if candidate in files:
                    return candidate
        return None

    def python_package_exists(self, module: str) -> bool:
        head = module.split(".")[0]
        files = self.file_set
        return f"{head}.py" in files or any(f.startswith(head + "/") for f in files)

    def resolve_js_module(self, importer: str, spec: str) -> str | None:
        if not spec.startswith("."):
            return None
        stem = posixpath.normpath(posixpath.join(posixpath.dirname(importer), spec))
        files = self.file_set
        candidates = [stem] + [stem + ext for ext in JS_EXTS] + [posixpath.join(stem, "index" + ext) for ext in JS_EXTS]
        for candidate in candidates:
            if candidate in files:
                return candidate
        return None
