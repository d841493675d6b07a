from threading import Event

import pytest

from web.tpc.endpoint import CopyJob, JobManager, State
from web.tpc.exc import Kind, TpcError
from web.tpc.marker import CREATED
from web.tpc.path import normalize_path
from web.tpc.protocol import TransferMode


def job(**kw):
	return CopyJob(TransferMode.PULL, normalize_path('/data/f'), 'https://a.example/data/f', **kw)


@pytest.fixture
def manager():
	jobs = JobManager(2)
	yield jobs
	jobs.shutdown()


class TestLifecycle(object):
	def test_initial(self):
		j = job(forwarded={'Authorization': 'Bearer t'})
		
		assert j.state is State.PENDING
		assert j.forwarded_authorization == 'Bearer t'
		assert len(j.id) == 24
		assert not j.wait(0)
	
	def test_transitions(self):
		j = job()
		j.transition(State.RUNNING)
		j.transition(State.SUCCEEDED)
		
		assert j.wait(0)
		assert j.terminal == CREATED
		assert j.started_at <= j.finished_at
	
	@pytest.mark.parametrize('path', [(State.SUCCEEDED, ), (State.RUNNING, State.PENDING),
			(State.RUNNING, State.FAILED, State.RUNNING)])
	def test_illegal(self, path):
		j = job()
		
		with pytest.raises(TpcError):
			for state in path:
				j.transition(state, TpcError(Kind.TIMEOUT, "slow"))
	
	def test_unfinished_has_no_terminal(self):
		with pytest.raises(TpcError):
			job().terminal
	
	def test_failed_terminal(self):
		j = job()
		j.transition(State.RUNNING)
		j.transition(State.FAILED, TpcError(Kind.REMOTE_FAILURE, "remote answered 404", 404))
		
		assert j.terminal.render() == "failure: REMOTE_FAILURE 404: remote answered 404\n"
		assert j.as_dict()['reason'] == "REMOTE_FAILURE 404: remote answered 404"
	
	def test_cancel(self):
		j = job()
		j.cancel()
		
		assert j.cancelled
		
		with pytest.raises(TpcError) as exc:
			j.check()
		
		assert exc.value.kind is Kind.CANCELLED


class TestProgress(object):
	def test_markers(self):
		j = job(streams=3)
		j.begin(3)
		j.advance(0, 10)
		j.advance(2, 5)
		j.advance(0, 1)
		
		assert j.progress == [11, 0, 5]
		assert j.bytes_done == 16
		
		markers = j.markers(now=1700000000)
		
		assert [m.stripe_bytes_transferred for m in markers] == [11, 0, 5]
		assert {m.total_stripe_count for m in markers} == {3}
		assert {m.timestamp for m in markers} == {1700000000}
	
	def test_as_dict(self):
		j = job()
		j.begin(2)
		j.advance(1, 7)
		document = j.as_dict()
		
		assert document['mode'] == 'PULL'
		assert document['state'] == 'PENDING'
		assert document['stripe_bytes'] == [0, 7]
		assert document['bytes_done'] == 7
		assert document['reason'] is None


class TestJobManager(object):
	def test_success(self, manager):
		j = manager.submit(job(), lambda j: None)
		
		assert j.wait(5)
		assert j.state is State.SUCCEEDED
		assert manager.get(j.id) is j
		assert manager.jobs == [j]
	
	def test_classified_failure(self, manager):
		def work(j):
			raise TpcError(Kind.TIMEOUT, "No progress.")
		
		j = manager.submit(job(), work)
		j.wait(5)
		
		assert j.state is State.FAILED
		assert j.error.kind is Kind.TIMEOUT
	
	def test_crash(self, manager):
		def work(j):
			raise RuntimeError("boom")
		
		j = manager.submit(job(), work)
		j.wait(5)
		
		assert j.state is State.FAILED
		assert j.error.kind is Kind.REMOTE_FAILURE
		assert 'boom' in j.error.detail
	
	def test_cancelled_while_running(self, manager):
		started = Event()
		
		def work(j):
			started.set()
			
			while True:
				j.check()
				Event().wait(0.01)
		
		j = manager.submit(job(), work)
		started.wait(5)
		j.cancel()
		
		assert j.wait(5)
		assert j.state is State.CANCELLED
		assert j.terminal.error.kind is Kind.CANCELLED
	
	def test_cancelled_before_starting(self):
		jobs = JobManager(1)
		release = Event()
		
		try:
			first = jobs.submit(job(), lambda j: release.wait(5))
			queued = jobs.submit(job(), lambda j: None)
			queued.cancel()
			release.set()
			
			assert queued.wait(5)
			assert queued.state is State.CANCELLED
			assert queued.started_at is not None  # Passed through RUNNING.
			assert first.wait(5)
		
		finally:
			release.set()
			jobs.shutdown()
	
	def test_bounded_concurrency(self, manager):
		release = Event()
		submitted = [manager.submit(job(), lambda j: release.wait(5)) for _ in range(5)]
		
		Event().wait(0.2)
		
		assert manager.running <= 2
		
		release.set()
		
		for j in submitted:
			assert j.wait(5)
		
		assert manager.peak == 2
		assert manager.running == 0
	
	def test_retention(self):
		jobs = JobManager(1, retain=2)
		
		try:
			finished = [jobs.submit(job(), lambda j: None) for _ in range(4)]
			
			for j in finished:
				j.wait(5)
			
			jobs.submit(job(), lambda j: None).wait(5)
			
			assert len(jobs.jobs) <= 3
			assert jobs.get(finished[0].id) is None
		
		finally:
			jobs.shutdown()
	
	def test_shutdown_cancels(self):
		jobs = JobManager(1)
		started = Event()
		
		def work(j):
			started.set()
			
			while True:
				j.check()
				Event().wait(0.01)
		
		j = jobs.submit(job(), work)
		started.wait(5)
		jobs.shutdown()
		
		assert j.state is State.CANCELLED
