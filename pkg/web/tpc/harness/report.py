"""Harness reports: JSON documents validated against the schemas shipped with this package."""

import json
import sys

from enum import Enum
from functools import lru_cache
from importlib.resources import files
from pathlib import Path
from typing import List, Optional

from jsonschema import Draft202012Validator


log = __import__('logging').getLogger(__name__)

SCHEMA_VERSION = '1'
KINDS = ('smoke', 'matrix', 'drill')


class Status(Enum):
	PASS = 'PASS'
	FAIL = 'FAIL'
	SKIPPED = 'SKIPPED'
	
	def __str__(self) -> str:
		return self.value


@lru_cache(maxsize=None)
def validator(kind:str) -> Draft202012Validator:
	if kind not in KINDS:
		raise LookupError(f"No report schema for {kind!r}.")
	
	schema = json.loads((files('web.tpc') / 'schema' / f'{kind}.json').read_text('utf-8'))
	Draft202012Validator.check_schema(schema)
	
	return Draft202012Validator(schema)


def validate(document:dict) -> List[str]:
	"""Every way the document departs from the schema for its kind; empty when valid."""
	
	kind = document.get('kind') if isinstance(document, dict) else None
	
	try:
		checker = validator(kind)
	except LookupError as e:
		return [str(e)]
	
	return [f"{'/'.join(str(p) for p in error.absolute_path) or '<root>'}: {error.message}"
			for error in sorted(checker.iter_errors(document), key=str)]


def envelope(kind:str, **content) -> dict:
	return {'schema_version': SCHEMA_VERSION, 'kind': kind, **content}


def write(document:dict, destination:Optional[str]) -> None:
	"""Write a report as JSON to a path, or to standard output for `-`."""
	
	problems = validate(document)
	
	if problems:
		log.error("Report does not match its schema.", extra=dict(kind=document.get('kind'), problems=problems))
	
	text = json.dumps(document, indent=2, sort_keys=True) + "\n"
	
	if destination in (None, '-'):
		sys.stdout.write(text)
		return
	
	Path(destination).write_text(text, 'utf-8')
	log.info(f"Wrote {document.get('kind')} report to {destination}.", extra=dict(path=destination))
