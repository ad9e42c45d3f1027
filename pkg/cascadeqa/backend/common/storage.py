"""
File storage for run outputs (submission files, reports, transcripts)
"""
import os
import tempfile
from pathlib import Path
from typing import List
import logging

from common.exceptions import SubmissionIOError

logger = logging.getLogger(__name__)


class FileStorage:
    """Handles file storage operations under one output directory"""

    def __init__(self, base_path: str | Path = "outputs"):
        self.base_path = Path(base_path)
        self.base_path.mkdir(parents=True, exist_ok=True)

    def save_file(self, file_content: bytes, filename: str, subdirectory: str = "") -> str:
        """Write a file atomically: temp file in the same directory, then rename"""
        subdir_path = self.base_path / subdirectory
        subdir_path.mkdir(parents=True, exist_ok=True)

        file_path = subdir_path / filename
        try:
            fd, tmp_name = tempfile.mkstemp(prefix=".cascadeqa_", dir=subdir_path)
            with os.fdopen(fd, "wb") as f:
                f.write(file_content)
            os.replace(tmp_name, file_path)
        except OSError as e:
            raise SubmissionIOError(f"Failed to write {file_path}: {e}")

        logger.info(f"File saved: {file_path}")
        return str(file_path)

    def save_text(self, text: str, filename: str, subdirectory: str = "") -> str:
        return self.save_file(text.encode("utf-8"), filename, subdirectory)

    def list_files(self, subdirectory: str = "") -> List[str]:
        """List all files in a subdirectory"""
        subdir_path = self.base_path / subdirectory
        if not subdir_path.exists():
            return []

        return sorted(f.name for f in subdir_path.iterdir() if f.is_file())

