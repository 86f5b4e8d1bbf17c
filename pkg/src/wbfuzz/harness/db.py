"""In-memory SQL database with a restorable baseline."""

from __future__ import annotations

import sqlite3
import threading
from typing import Optional

from ..sqlgen import TableSchema


class HarnessConfigError(LookupError):
    pass


class Database:
    def __init__(self, tables: list[TableSchema], baseline: Optional[dict] = None):
        self.tables = {t.name.lower(): t for t in tables}
        self._lock = threading.RLock()
        self.conn = sqlite3.connect(":memory:", check_same_thread=False, isolation_level=None)
        for t in tables:
            self.conn.execute(t.ddl())
        for table, rows in (baseline or {}).items():
            for row in rows:
                self.insert(table, row)
        self._baseline = sqlite3.connect(":memory:", check_same_thread=False)
        self.conn.backup(self._baseline)
        self.dirty = False

    def _table(self, name: str) -> TableSchema:
        t = self.tables.get(name.lower())
        if t is None:
            raise HarnessConfigError(f"unknown table {name!r}")
        return t

    def select(self, table: str, where: Optional[dict] = None) -> list[dict]:
        t = self._table(table)
        sql = f"SELECT * FROM {t.name}"
        args: list = []
        if where:
            conds = []
            for k, v in where.items():
                if t.column(k) is None:
                    raise HarnessConfigError(f"unknown column {table}.{k}")
                if v is None:
                    conds.append(f"{k} IS NULL")
                else:
                    conds.append(f"{k} = ?")
                    args.append(v)
            sql += " WHERE " + " AND ".join(conds)
        pk = t.primary_key
        if pk is not None:
            sql += f" ORDER BY {pk.name}"
        with self._lock:
            cur = self.conn.execute(sql, args)
            names = [d[0] for d in cur.description]
            return [dict(zip(names, r)) for r in cur.fetchall()]

    def insert(self, table: str, row: dict) -> None:
        """Insert ``row``; raises ``sqlite3.IntegrityError`` on constraint failure."""
        t = self._table(table)
        cols = list(row)
        for c in cols:
            if t.column(c) is None:
                raise HarnessConfigError(f"unknown column {table}.{c}")
        sql = f"INSERT INTO {t.name} ({', '.join(cols)}) VALUES ({', '.join('?' * len(cols))})"
        with self._lock:
            self.dirty = True
            self.conn.execute(sql, [row[c] for c in cols])

    def delete(self, table: str, where: Optional[dict] = None) -> int:
        t = self._table(table)
        sql, args = f"DELETE FROM {t.name}", []
        if where:
            sql += " WHERE " + " AND ".join(f"{k} = ?" for k in where)
            args = list(where.values())
        with self._lock:
            self.dirty = True
            return self.conn.execute(sql, args).rowcount

    def reset(self) -> None:
        with self._lock:
            if self.dirty:
                self._baseline.backup(self.conn)
                self.dirty = False

    def dump(self) -> str:
        with self._lock:
            return "\n".join(self.conn.iterdump())
