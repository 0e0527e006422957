"""Shared CSV-writing helpers for the plots tests."""

import csv

import pytest

from plots import EVENTS_HEADER, SUMMARY_HEADER


def _write(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


@pytest.fixture
def write_events(tmp_path):
    def _inner(rows, name="events.csv"):
        return _write(tmp_path / name, EVENTS_HEADER, rows)

    return _inner


@pytest.fixture
def write_summary(tmp_path):
    def _inner(rows, name="summary.csv"):
        return _write(tmp_path / name, SUMMARY_HEADER, rows)

    return _inner
