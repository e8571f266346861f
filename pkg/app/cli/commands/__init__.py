from dataclasses import dataclass, field
from typing import List, Optional, Union

from pydantic import BaseModel


@dataclass
class CommandOutput:
    """Rows for a headered table, or a single report for JSON."""

    rows: Optional[List[dict]] = None
    columns: List[str] = field(default_factory=list)
    payload: Optional[Union[BaseModel, dict, list]] = None
