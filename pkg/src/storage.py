import hashlib
import json
import os
import sqlite3
from datetime import datetime
from typing import Any, Dict, List, Optional

from utils import get_env


DEFAULT_DB_PATH = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'runs.db')


def db_path() -> str:
    return get_env('QUTRIT_DB_PATH', DEFAULT_DB_PATH) or DEFAULT_DB_PATH


def _connect():
    conn = sqlite3.connect(db_path())
    conn.execute(
        """
        CREATE TABLE IF NOT EXISTS runs (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            digest TEXT UNIQUE,
            command TEXT,
            n_parties INTEGER,
            variant TEXT,
            passed INTEGER,
            report TEXT,
            recorded_at TEXT
        )
        """
    )
    return conn


def config_digest(config: Dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON of a run config, output locations excluded."""
    canonical = {k: v for k, v in config.items() if k not in ('json_path', 'out_dir')}
    payload = json.dumps(canonical, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()


def is_recorded(digest: str) -> bool:
    conn = _connect()
    try:
        cur = conn.execute("SELECT 1 FROM runs WHERE digest = ?", (digest,))
        row = cur.fetchone()
        return row is not None
    finally:
        conn.close()


def save_run(record: Dict[str, Any]) -> None:
    conn = _connect()
    try:
        conn.execute(
            """
            INSERT OR IGNORE INTO runs (
                digest, command, n_parties, variant, passed, report, recorded_at
            )
            VALUES (?, ?, ?, ?, ?, ?, ?)
            """,
            (
                record.get('digest'),
                record.get('command'),
                record.get('n_parties'),
                record.get('variant'),
                int(bool(record.get('passed'))),
                json.dumps(record.get('report'), sort_keys=True),
                record.get('recorded_at') or datetime.utcnow().isoformat(),
            ),
        )
        conn.commit()
    finally:
        conn.close()


def get_report(digest: str) -> Optional[Dict[str, Any]]:
    """Archived report for a config digest, if any."""
    conn = _connect()
    try:
        cursor = conn.execute("SELECT report FROM runs WHERE digest = ?", (digest,))
        row = cursor.fetchone()
        return json.loads(row[0]) if row and row[0] else None
    finally:
        conn.close()


def list_runs(limit: int = 50) -> List[Dict[str, Any]]:
    conn = _connect()
    try:
        cursor = conn.execute(
            """
            SELECT digest, command, n_parties, variant, passed, recorded_at
            FROM runs ORDER BY id DESC LIMIT ?
            """,
            (limit,),
        )
        return [
            {
                'digest': row[0],
                'command': row[1],
                'n_parties': row[2],
                'variant': row[3],
                'passed': bool(row[4]),
                'recorded_at': row[5],
            }
            for row in cursor.fetchall()
        ]
    finally:
        conn.close()
