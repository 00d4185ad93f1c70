"""
Utility functions for the fill-tuning toolkit
"""
import csv
import hashlib
import json
import math

from .exceptions import ArtifactMismatchError, ArtifactParseError


HASH_PREFIX = '# config_hash='


def format_decimal(value):
    """Format a float with 17 significant digits (value-exact round trip)"""
    return format(float(value), '.17g')


def canonical_json(data):
    """Compact, key-sorted JSON used for hashing"""
    return json.dumps(data, sort_keys=True, separators=(',', ':'))


def short_hash(data):
    return hashlib.sha256(canonical_json(data).encode('utf-8')).hexdigest()[:16]


def float_list(values):
    return [float(v) for v in values]


# ============================================
# JSON DOCUMENTS
# ============================================
def write_json(path, document):
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(document, handle, indent=2, sort_keys=True)
        handle.write('\n')


def read_json(path):
    try:
        with open(path, encoding='utf-8') as handle:
            return json.load(handle)
    except json.JSONDecodeError as exc:
        raise ArtifactParseError(f'invalid JSON in {path}: {exc}') from exc


def require_key(document, key, path='$'):
    if not isinstance(document, dict):
        raise ArtifactParseError('expected an object', path)
    if key not in document:
        raise ArtifactParseError(f'missing key "{key}"', path)
    return document[key]


def require_number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ArtifactParseError('expected a number', path)
    if not math.isfinite(value):
        raise ArtifactParseError('expected a finite number', path)
    return float(value)


def require_vector(value, path, dimension=None):
    if not isinstance(value, list):
        raise ArtifactParseError('expected a list of numbers', path)
    vector = [require_number(v, f'{path}[{i}]') for i, v in enumerate(value)]
    if dimension is not None and len(vector) != dimension:
        raise ArtifactParseError(f'expected {dimension} entries, got {len(vector)}', path)
    return vector


def check_config_hash(document, expected, source):
    """Reject artifacts produced under another configuration"""
    if expected is None:
        return
    found = document.get('config_hash') if isinstance(document, dict) else None
    if found != expected:
        raise ArtifactMismatchError(
            f'{source} was written with config hash {found}, current config hash is {expected}'
        )


# ============================================
# CSV FILES
# ============================================
def write_csv(path, header, rows, config_hash=None):
    """Write numeric rows with 17-significant-digit decimals"""
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        if config_hash is not None:
            handle.write(f'{HASH_PREFIX}{config_hash}\n')
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_decimal(v) for v in row])


def read_csv(path):
    """Return (config_hash or None, header, rows of floats)"""
    with open(path, encoding='utf-8', newline='') as handle:
        lines = handle.read().splitlines()
    config_hash = None
    if lines and lines[0].startswith(HASH_PREFIX):
        config_hash = lines[0][len(HASH_PREFIX):].strip()
        lines = lines[1:]
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise ArtifactParseError(f'{path} has no header row') from None
    rows = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ArtifactParseError(f'expected {len(header)} columns', f'{path}:{line_no}')
        try:
            rows.append([float(v) for v in row])
        except ValueError:
            raise ArtifactParseError('non-numeric value', f'{path}:{line_no}') from None
    return config_hash, header, rows
