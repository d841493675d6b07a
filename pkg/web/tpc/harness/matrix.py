"""The transfer matrix: every ordered pair of endpoints, in both modes, at small scale."""

from concurrent.futures import ThreadPoolExecutor
from itertools import permutations
from typing import List, Tuple

from ..client import Orchestrator, Preference, TransferReport, TransferSpec
from ..path import join_url, normalize_path
from ..protocol import TransferMode
from ..scope import Activity, Scope
from ..util import KeyIdentifier
from .dataset import DatasetConfig, content
from .mesh import Mesh
from .report import envelope


log = __import__('logging').getLogger(__name__)

MODES = (TransferMode.PULL, TransferMode.PUSH)

Cell = Tuple[int, int, TransferMode]


def cells(count:int) -> List[Cell]:
	"""Every (source, destination, mode) combination; `count × (count - 1) × 2` of them."""
	return [(a, b, mode) for a, b in permutations(range(count), 2) for mode in MODES]


def render(endpoints:List[str], results:List[dict]) -> str:
	"""A text table: a row per source, a column per destination, and the outcome of each mode in every cell."""
	
	if len(endpoints) < 2:
		return "(no endpoint pairs)\n"
	
	index = {url: i for i, url in enumerate(endpoints)}
	grid = {}
	
	for result in results:
		key = (index[result['source']], index[result['destination']])
		mark = 'ok' if result['outcome'] == 'SUCCEEDED' else (result['failure'] or {}).get('kind', 'FAILED')
		grid.setdefault(key, {})[result['mode']] = mark
	
	labels = [f'E{i}' for i in range(len(endpoints))]
	rows = [['src \\ dst'] + labels]
	
	for a, label in enumerate(labels):
		row = [label]
		
		for b in range(len(endpoints)):
			if a == b:
				row.append('-')
				continue
			
			marks = grid.get((a, b), {})
			row.append(' '.join(f"{mode}:{marks.get(mode, '?')}" for mode in ('PULL', 'PUSH')))
		
		rows.append(row)
	
	widths = [max(len(row[c]) for row in rows) for c in range(len(rows[0]))]
	lines = ['  '.join(text.ljust(width) for text, width in zip(row, widths)).rstrip() for row in rows]
	lines.append('')
	lines.extend(f"{label} = {url}" for label, url in zip(labels, endpoints))
	
	return "\n".join(lines) + "\n"


def _cell(report:TransferReport, source:str, destination:str, mode:TransferMode) -> dict:
	return {
			'source': source,
			'destination': destination,
			'mode': str(mode),
			'auth': 'token',
			'outcome': str(report.outcome),
			'duration': report.duration,
			'bytes': report.bytes,
			'attempts': report.attempts,
			'failure': report.error.as_dict() if report.error else None,
			'source_digest': report.source_digest,
			'destination_digest': report.destination_digest,
		}


def cmd_matrix(mesh:Mesh, dataset:DatasetConfig, orchestrator:Orchestrator, *, workers:int=4,
		attempt_budget:int=1) -> dict:
	"""Seed one file on each endpoint, then copy it to every other endpoint in each mode.

	Destination paths are unique to the run, so repeated runs against the same mesh do not collide.
	"""
	
	run = str(KeyIdentifier())
	prefix = normalize_path(f'/matrix/{run}')
	endpoints = mesh.urls
	seeded = {}
	
	log.info(f"Starting a transfer matrix over {len(endpoints)} endpoints.", extra=dict(run=run, endpoints=endpoints))
	
	for i, member in enumerate(mesh.members):
		url = join_url(member.url, prefix / f'origin-{i}')
		
		try:
			token = orchestrator.acquire_token(member.url, [Scope(Activity.UPLOAD, prefix)], member.credential)
			orchestrator.upload(url, content(dataset.seed, i, dataset.file_size_bytes), token)
			seeded[i] = url
		
		except Exception as e:
			log.error(f"Unable to seed {member.url}: {e}", extra=dict(endpoint=member.url))
	
	def transfer(cell:Cell) -> dict:
		a, b, mode = cell
		source = seeded.get(a, join_url(endpoints[a], prefix / f'origin-{a}'))
		destination = join_url(endpoints[b], prefix / f'from-{a}-{str(mode).lower()}')
		spec = TransferSpec(source, destination, Preference(str(mode)), attempt_budget=attempt_budget)
		
		return _cell(orchestrator.third_party_copy(spec), endpoints[a], endpoints[b], mode)
	
	with ThreadPoolExecutor(max(1, workers), thread_name_prefix='tpc-matrix') as pool:
		results = list(pool.map(transfer, cells(len(endpoints))))
	
	succeeded = sum(1 for result in results if result['outcome'] == 'SUCCEEDED')
	
	log.info(f"Transfer matrix complete: {succeeded} of {len(results)} cells succeeded.", extra=dict(run=run,
			cells=len(results), succeeded=succeeded))
	
	return envelope('matrix',
			endpoints = endpoints,
			cells = results,
			summary = {'cells': len(results), 'succeeded': succeeded, 'failed': len(results) - succeeded},
			table = render(endpoints, results),
		)
