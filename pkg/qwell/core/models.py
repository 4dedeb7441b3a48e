# qwell/core/models.py
import uuid
from datetime import datetime
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


# ==========================================
# 1. THE COMMAND ENVELOPE (Input)
# ==========================================
class CommandInput(BaseModel):
    """
    The packet handed to any command by the kernel.
    Only 'params' varies between commands; it is validated against TASK_SCHEMA_MAP.
    """
    task: str = Field(..., description="Command name (e.g. 'simulate', 'obstruction')")
    params: Dict[str, Any] = Field(default_factory=dict, description="Resolved run config for the command")
    out_dir: Optional[str] = Field(None, description="Directory receiving report files")
    request_id: str = Field(default_factory=lambda: str(uuid.uuid4()))


# ==========================================
# 2. THE COMMAND RECEIPT (Output)
# ==========================================
class CommandOutput(BaseModel):
    """
    The result returned by any command.
    """
    status: str = Field(..., description="'success' or 'error'")
    data: Any = Field(default=None, description="Report payload (JSON-serializable)")
    message: str = Field(..., description="Human readable summary")
    exit_code: int = Field(default=0, description="Process exit status the CLI reports")
    files: List[str] = Field(default_factory=list, description="Report files written")
    timestamp: datetime = Field(default_factory=datetime.now)
