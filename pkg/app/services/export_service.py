import json
import logging
import os
import re
import tempfile
from importlib import metadata
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from app.core.config import settings
from app.core.exceptions import InvalidInput, ParseError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
VERSIONED_PACKAGES = ("numpy", "scipy", "pandas", "pydantic", "pydantic-settings")


class ExportService:
    """Reading data files and writing result tables, reports and manifests."""

    @staticmethod
    def _atomic_write(path: Union[str, Path], text: str) -> Path:
        """Write to a temporary file in the target directory, then rename over the target."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            os.replace(tmp_name, path)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise
        logger.info(f"Wrote {path}")
        return path

    @staticmethod
    def read_data_csv(path: Union[str, Path]) -> np.ndarray:
        """
        Read a headerless numeric CSV, one observation per row.

        Args:
            path: CSV file

        Returns:
            n×d float array

        Raises:
            ParseError: ragged rows or non-numeric fields, with 1-based row/column
            InvalidInput: missing or empty file
        """
        try:
            frame = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, skip_blank_lines=True)
        except FileNotFoundError:
            raise InvalidInput(f"data file not found: {path}")
        except pd.errors.EmptyDataError:
            raise InvalidInput(f"data file is empty: {path}")
        except pd.errors.ParserError as e:
            match = re.search(r"line (\d+)", str(e))
            raise ParseError("ragged row", row=int(match.group(1)) if match else None)

        if frame.empty:
            raise InvalidInput(f"data file is empty: {path}")
        values = np.empty(frame.shape)
        for row, record in enumerate(frame.itertuples(index=False), start=1):
            for column, field in enumerate(record, start=1):
                text = field.strip() if isinstance(field, str) else ""
                if text == "":
                    raise ParseError("missing field (ragged row)", row=row, column=column)
                try:
                    number = float(text)
                except ValueError:
                    raise ParseError(f"non-numeric field {text!r}", row=row, column=column)
                if not np.isfinite(number):
                    raise ParseError(f"non-finite field {text!r}", row=row, column=column)
                values[row - 1, column - 1] = number
        return values

    def write_data_csv(self, path: Union[str, Path], data: np.ndarray) -> Path:
        """Headerless CSV with 17 significant digits, so reading it back is exact."""
        frame = pd.DataFrame(np.atleast_2d(np.asarray(data, dtype=float)))
        return self._atomic_write(path, frame.to_csv(header=False, index=False, float_format=FLOAT_FORMAT))

    def write_table(self, path: Union[str, Path], rows: List[dict], columns: Sequence[str]) -> Path:
        """Headered result table with a fixed column order."""
        frame = pd.DataFrame(rows, columns=list(columns))
        return self._atomic_write(path, frame.to_csv(index=False, float_format=FLOAT_FORMAT))

    def write_json(self, path: Union[str, Path], payload: Union[BaseModel, Dict, List]) -> Path:
        if isinstance(payload, BaseModel):
            payload = payload.model_dump(mode="json")
        elif isinstance(payload, list):
            payload = [p.model_dump(mode="json") if isinstance(p, BaseModel) else p for p in payload]
        return self._atomic_write(path, json.dumps(payload, indent=2, ensure_ascii=False) + "\n")

    @staticmethod
    def package_versions() -> Dict[str, str]:
        versions = {settings.APP_NAME: settings.APP_VERSION}
        for package in VERSIONED_PACKAGES:
            try:
                versions[package] = metadata.version(package)
            except metadata.PackageNotFoundError:
                versions[package] = "unknown"
        return versions

    @staticmethod
    def manifest_path(output: Union[str, Path]) -> Path:
        output = Path(output)
        return output.with_name(f"{output.stem}.manifest.json")

    def write_manifest(self, output: Union[str, Path], manifest: BaseModel) -> Path:
        return self.write_json(self.manifest_path(output), manifest)

    @staticmethod
    def default_output(command: str, fmt: str, directory: Optional[str] = None) -> Path:
        return Path(directory or settings.OUTPUT_DIR) / f"{command}.{fmt}"


# Singleton instance
export_service = ExportService()
