#!/usr/bin/env python3

from .csv_io import (
    export_tables,
    import_tables,
    read_csv,
    read_matrix_csv,
    trajectory_table,
    write_csv,
    write_matrix_csv,
)

__all__ = [
    'export_tables',
    'import_tables',
    'read_csv',
    'read_matrix_csv',
    'trajectory_table',
    'write_csv',
    'write_matrix_csv',
]
