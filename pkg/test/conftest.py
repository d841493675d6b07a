import pytest

from web.tpc.store import DirectoryStore, MemoryStore

from helper import endpoint


@pytest.fixture(params=['memory', 'directory'])
def store(request, tmp_path):
	"""Each test using a store runs against both backends."""
	
	if request.param == 'memory':
		yield MemoryStore()
	
	else:
		yield DirectoryStore(str(tmp_path / 'store'))


@pytest.fixture
def app():
	"""A fresh in-memory endpoint for request-level tests."""
	
	application = endpoint()
	yield application
	application.close()
