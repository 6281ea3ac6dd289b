"""
sel_path.py - Artifact path object: a pathlib.Path that knows how sel_lab writes its results.
"""

from contextlib import contextmanager
import csv
import io
import json
import os
import shutil
import sys
import tempfile
import typing
from pathlib import Path, WindowsPath, PosixPath

import nb_log

# Inherit from the concrete flavour of the running platform; pathlib.Path itself cannot be subclassed.
_Base = WindowsPath if sys.platform == "win32" else PosixPath

PARTIAL_SUFFIX = ".partial"


def format_float(x: float) -> str:
    """Fixed float rendering of every numeric CSV cell, so identical runs give identical bytes."""
    return "%.17g" % x


def csv_text(header: typing.Sequence[str], rows: typing.Iterable[typing.Sequence]) -> str:
    """
    Render a table as CSV text. Floats use ``format_float``; bools are written as 0/1.

    Example:
        >>> csv_text(["x", "ok"], [(0.5, True)])
        'x,ok\\n0.5,1\\n'
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return format_float(v)
    if hasattr(v, "dtype") and hasattr(v, "item"):
        return _cell(v.item())
    if v is None:
        return ""
    return v


class SelPath(_Base):
    """
    SelPath is the path type every artifact of a run goes through.
    It keeps the behaviour of pathlib.Path (including the '/' operator) and adds
    chained writers for the JSON/CSV artifacts and the '.partial' convention for
    results of a failed solve.
    """

    logger = nb_log.get_logger('sel_lab.SelPath')

    def __new__(cls, *args, **kwargs):
        return super().__new__(cls, *args, **kwargs)

    def ensure_parent(self):
        """
        Ensures that the parent directory exists. Supports chained calls.

        Example:
            SelPath('out/eigen/phi.csv').ensure_parent().write_text('...')
        """
        self.parent.mkdir(parents=True, exist_ok=True)
        return self

    def ensure_dir(self):
        self.mkdir(parents=True, exist_ok=True)
        return self

    def delete(self, missing_ok: bool = True):
        """
        Deletes a file or a directory tree.
        :param missing_ok: If True, do not raise an error if the path does not exist.
        """
        try:
            if self.is_file() or self.is_symlink():
                self.unlink()
                self.logger.debug(f"Deleted file: {self}")
            elif self.is_dir():
                shutil.rmtree(self)
                self.logger.debug(f"Deleted directory tree: {self}")
            elif not missing_ok:
                raise FileNotFoundError(f"{self} does not exist.")
        except FileNotFoundError:
            if not missing_ok:
                raise
        return self

    def read_text(self, encoding: str = "utf-8", errors: str = None) -> str:
        return super().read_text(encoding=encoding, errors=errors)

    def write_text(self, data: str, encoding: str = "utf-8", errors: str = None) -> int:
        # newline="" keeps '\n' on every platform so artifacts are byte-identical
        with self.open("w", encoding=encoding, errors=errors, newline="") as f:
            return f.write(data)

    def read_json(self) -> typing.Any:
        return json.loads(self.read_text())

    def write_json(self, data: typing.Any, indent: int = 2):
        """Writes ``data`` as JSON with insertion-ordered keys; creates parent directories."""
        self.ensure_parent()
        self.write_text(json.dumps(data, indent=indent, ensure_ascii=False, allow_nan=True) + "\n")
        self.logger.debug(f"Wrote JSON artifact: {self}")
        return self

    def write_csv(self, header: typing.Sequence[str], rows: typing.Iterable[typing.Sequence]):
        self.ensure_parent()
        self.write_text(csv_text(header, rows))
        self.logger.debug(f"Wrote CSV artifact: {self}")
        return self

    def write_csv_text(self, text: str):
        self.ensure_parent()
        self.write_text(text)
        return self

    def as_partial(self) -> "SelPath":
        """The sibling path carrying the '.partial' suffix, e.g. u.csv -> u.csv.partial."""
        if self.name.endswith(PARTIAL_SUFFIX):
            return self
        return self.with_name(self.name + PARTIAL_SUFFIX)

    def is_partial(self) -> bool:
        return self.name.endswith(PARTIAL_SUFFIX)

    @classmethod
    def output_dir(cls, configured: typing.Union[os.PathLike, str, None] = None) -> "SelPath":
        """
        Resolve the output directory: explicit value, then $SEL_OUTPUT_DIR, then ./sel_output.
        """
        if configured:
            return cls(configured)
        return cls(os.environ.get("SEL_OUTPUT_DIR") or "sel_output")

    @classmethod
    @contextmanager
    def tempdir(
        cls,
        suffix: str = None,
        prefix: str = None,
        dir: typing.Union[os.PathLike, str] = None,
        cleanup: bool = True,
    ) -> typing.Generator["SelPath", None, None]:
        """
        Creates a temporary directory as a context manager, yielding a SelPath.

        Args:
            suffix (str, optional): Directory name suffix.
            prefix (str, optional): Directory name prefix.
            dir (os.PathLike or str, optional): Parent directory; the system default if omitted.
            cleanup (bool, optional): If False the directory is kept for inspection.

        Example:
            >>> with SelPath.tempdir(prefix="sel_") as out:
            ...     (out / "summary.json").write_json({"mu": 1.0})
            ...     assert (out / "summary.json").is_file()
        """
        if cleanup:
            with tempfile.TemporaryDirectory(suffix=suffix, prefix=prefix, dir=dir) as temp_dir_str:
                yield cls(temp_dir_str)
        else:
            yield cls(tempfile.mkdtemp(suffix=suffix, prefix=prefix, dir=dir))


__all__ = ["SelPath", "Path", "csv_text", "format_float", "PARTIAL_SUFFIX"]
