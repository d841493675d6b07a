"""The scale drill: upload a dataset, replicate it everywhere, delete the replicas, and repeat.

Transfers are pulls, at most `concurrency` of them in flight per destination. Completed transfers are bucketed into
fixed intervals of wall-clock time, measured from the start of the first cycle, reporting the bytes and transfers
completed within each.
"""

from concurrent.futures import ThreadPoolExecutor
from math import floor
from threading import Event
from time import monotonic
from typing import Dict, List, Optional

from ..client import Orchestrator, Outcome, Preference, TransferReport, TransferSpec
from ..exc import Kind, TpcError
from ..path import join_url
from ..scope import Activity, Scope
from ..util import KeyIdentifier
from .dataset import Dataset, DatasetConfig
from .mesh import Mesh, Member
from .report import envelope


log = __import__('logging').getLogger(__name__)


class Drill:
	def __init__(self, mesh:Mesh, dataset:DatasetConfig, orchestrator:Orchestrator, *, cycles:int=1,
			concurrency:int=4, interval:float=60.0, attempt_budget:int=3, progress_timeout:float=60.0) -> None:
		if cycles < 0:
			raise TpcError(Kind.BAD_REQUEST, "The number of cycles must not be negative.")
		
		if concurrency < 1:
			raise TpcError(Kind.BAD_REQUEST, "At least one transfer per destination must be allowed.")
		
		if interval <= 0:
			raise TpcError(Kind.BAD_REQUEST, "The reporting interval must be positive.")
		
		self.mesh = mesh
		self.orchestrator = orchestrator
		self.cycles = cycles
		self.concurrency = concurrency
		self.interval = interval
		self.attempt_budget = attempt_budget
		self.progress_timeout = progress_timeout
		
		self.run = str(KeyIdentifier())
		self.dataset = Dataset(dataset, f'/drill/{self.run}')
		self.completed: List[tuple] = []  # (seconds since start, bytes) per successful transfer.
		self._started = monotonic()
	
	def __repr__(self) -> str:
		return f"Drill({self.mesh!r}, {self.dataset!r}, cycles={self.cycles})"
	
	@property
	def origin(self) -> Member:
		return self.mesh[0]
	
	def token(self, member:Member, activity:Activity) -> str:
		return self.orchestrator.acquire_token(member.url, [Scope(activity, self.dataset.prefix)], member.credential)
	
	def generate(self) -> None:
		token = self.token(self.origin, Activity.UPLOAD)
		
		for file in self.dataset:
			self.orchestrator.upload(join_url(self.origin.url, file.path), self.dataset.content(file.index), token)
		
		log.info(f"Generated {len(self.dataset)} files on {self.origin.url}.", extra=dict(run=self.run,
				files=len(self.dataset), bytes=self.dataset.total_bytes))
	
	def replicate(self, destination:Member, abort:Event) -> List[TransferReport]:
		"""Pull every dataset file to one destination, stopping early once `abort` is set."""
		
		def pull(file) -> Optional[TransferReport]:
			if abort.is_set():
				return None
			
			report = self.orchestrator.third_party_copy(TransferSpec(
					join_url(self.origin.url, file.path),
					join_url(destination.url, file.path),
					Preference.PULL,
					progress_timeout = self.progress_timeout,
					attempt_budget = self.attempt_budget,
				))
			
			if report.succeeded and report.source_digest != self.dataset.files[file.index].sha256:
				report.outcome, report.error = Outcome.FAILED, TpcError(Kind.REMOTE_FAILURE,
						f"Source digest of {file.path} differs from the generated dataset.")
			
			if report.succeeded:
				self.completed.append((monotonic() - self._started, report.bytes))
			else:
				abort.set()
			
			return report
		
		with ThreadPoolExecutor(self.concurrency, thread_name_prefix='tpc-drill') as pool:
			return [report for report in pool.map(pull, self.dataset) if report is not None]
	
	def purge(self, destination:Member) -> int:
		token = self.token(destination, Activity.DELETE)
		deleted = 0
		
		for file in self.dataset:
			try:
				self.orchestrator.delete(join_url(destination.url, file.path), token)
				deleted += 1
			
			except TpcError as e:
				if e.kind is not Kind.NOT_FOUND:
					log.warning(f"Unable to delete a replica: {e}", extra=dict(endpoint=destination.url,
							path=str(file.path)))
		
		return deleted
	
	def cycle(self, number:int) -> dict:
		started = monotonic()
		destinations = self.mesh.members[1:]
		abort = Event()
		
		with ThreadPoolExecutor(max(1, len(destinations)), thread_name_prefix='tpc-drill-destination') as pool:
			futures = [pool.submit(self.replicate, destination, abort) for destination in destinations]
			reports = [report for future in futures for report in future.result()]
		
		failures = [r.error.reason for r in reports if not r.succeeded]
		moved = sum(r.bytes for r in reports if r.succeeded)
		deleted = sum(self.purge(destination) for destination in destinations)
		
		summary = {
				'cycle': number,
				'transfers': len(reports),
				'succeeded': len(reports) - len(failures),
				'failed': len(failures),
				'bytes': moved,
				'retries': sum(r.attempts - 1 for r in reports),
				'duration': monotonic() - started,
				'aborted': abort.is_set(),
				'deleted': deleted,
				'failures': failures,
			}
		
		level = log.error if failures else log.info
		level(f"Drill cycle {number} moved {moved} bytes in {summary['succeeded']} transfers.", extra=dict(
				run=self.run, **{k: v for k, v in summary.items() if k != 'failures'}))
		
		return summary
	
	def intervals(self) -> List[dict]:
		buckets: Dict[int, List[int]] = {}
		
		for at, size in self.completed:
			bucket = buckets.setdefault(int(floor(at / self.interval)), [0, 0])
			bucket[0] += size
			bucket[1] += 1
		
		if not buckets:
			return []
		
		return [{
				'index': i,
				'start': i * self.interval,
				'end': (i + 1) * self.interval,
				'bytes': buckets.get(i, [0, 0])[0],
				'transfers': buckets.get(i, [0, 0])[1],
			} for i in range(max(buckets) + 1)]
	
	def __call__(self) -> dict:
		cycles = []
		
		try:
			self.generate()
		
		except TpcError as e:
			log.error(f"Unable to generate the dataset: {e}", extra=dict(run=self.run, origin=self.origin.url))
			cycles.append({'cycle': 0, 'transfers': 0, 'succeeded': 0, 'failed': 0, 'bytes': 0, 'retries': 0,
					'duration': 0.0, 'aborted': True, 'deleted': 0, 'failures': [e.reason]})
		
		else:
			self._started = monotonic()
			
			for number in range(self.cycles):
				summary = self.cycle(number)
				cycles.append(summary)
				
				if summary['aborted']:
					break
		
		totals = {key: sum(c[key] for c in cycles) for key in ('transfers', 'succeeded', 'failed', 'bytes', 'retries')}
		
		return envelope('drill',
				endpoints = self.mesh.urls,
				dataset = self.dataset.config.as_dict(),
				cycles_requested = self.cycles,
				concurrency = self.concurrency,
				interval = self.interval,
				attempt_budget = self.attempt_budget,
				cycles = cycles,
				intervals = self.intervals(),
				totals = totals,
				passed = not any(c['aborted'] or c['failed'] for c in cycles),
			)


def cmd_scale_drill(mesh:Mesh, dataset:DatasetConfig, orchestrator:Orchestrator, cycles:int, **options) -> dict:
	"""Run the replication drill for `cycles` cycles; failures are recorded in the report rather than raised."""
	return Drill(mesh, dataset, orchestrator, cycles=cycles, **options)()
