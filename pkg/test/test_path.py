import pytest

from hypothesis import given, strategies as st

from web.tpc.exc import Kind, TpcError
from web.tpc.path import ROOT, VirtualPath, join_url, normalize_path, path_contains, path_from_url, split_url


segment = st.text(st.characters(blacklist_characters='/\0', blacklist_categories=('Cs', )), min_size=1, max_size=8)
raw_paths = st.lists(st.one_of(segment, st.just('.'), st.just('')), max_size=6).map('/'.join)


class TestNormalization(object):
	@pytest.mark.parametrize('raw,expected', [
			('/a//b/./c', '/a/b/c'),
			('/', '/'),
			('', '/'),
			('/a/b/../c', '/a/c'),
			('a/b', '/a/b'),
			('/a/b/', '/a/b'),
			('/a/..', '/'),
		])
	def test_canonical_forms(self, raw, expected):
		assert str(normalize_path(raw)) == expected
	
	@pytest.mark.parametrize('raw', ['/../x', '..', '/a/../../b'])
	def test_escape_above_root(self, raw):
		with pytest.raises(TpcError) as exc:
			normalize_path(raw)
		
		assert exc.value.kind is Kind.BAD_REQUEST
	
	def test_nul_rejected(self):
		with pytest.raises(TpcError) as exc:
			normalize_path('/a\0b')
		
		assert exc.value.kind is Kind.BAD_REQUEST
	
	def test_invalid_segments_rejected_directly(self):
		for bad in ('', '.', '..', 'a/b'):
			with pytest.raises(TpcError):
				VirtualPath((bad, ))
	
	@given(raw_paths)
	def test_idempotent(self, raw):
		once = normalize_path(raw)
		assert normalize_path(str(once)) == once
	
	def test_case_sensitive(self):
		assert normalize_path('/Data') != normalize_path('/data')


class TestPathAccessors(object):
	def test_root(self):
		assert ROOT.is_root
		assert ROOT.name == ''
		assert str(ROOT) == '/'
		assert len(ROOT) == 0
	
	def test_join_and_parent(self):
		path = ROOT / 'data' / 'f1'
		assert str(path) == '/data/f1'
		assert path.name == 'f1'
		assert path.parent == normalize_path('/data')
		assert list(path.ancestors) == [normalize_path('/data'), ROOT]
	
	def test_repr(self):
		assert repr(normalize_path('/a/b')) == "VirtualPath('/a/b')"


class TestContainment(object):
	@pytest.mark.parametrize('prefix,candidate,expected', [
			('/data', '/data/f1', True),
			('/data', '/data', True),
			('/data', '/database', False),
			('/data/f1', '/data', False),
			('/', '/anything/at/all', True),
		])
	def test_examples(self, prefix, candidate, expected):
		assert path_contains(normalize_path(prefix), normalize_path(candidate)) is expected
	
	@given(raw_paths, raw_paths, raw_paths)
	def test_order_properties(self, a, b, c):
		a, b, c = normalize_path(a), normalize_path(b), normalize_path(c)
		
		assert path_contains(a, a)
		
		if path_contains(a, b) and path_contains(b, a):
			assert a == b
		
		if path_contains(a, b) and path_contains(b, c):
			assert path_contains(a, c)


class TestURLs(object):
	def test_decoded_once(self):
		assert str(path_from_url('/a%2520b')) == '/a%20b'
		assert str(path_from_url('/a%20b')) == '/a b'
	
	def test_invalid_utf8(self):
		with pytest.raises(TpcError) as exc:
			path_from_url('/%ff')
		
		assert exc.value.kind is Kind.BAD_REQUEST
	
	def test_split(self):
		assert split_url('https://ep1:8443/data/./f') == ('https://ep1:8443', normalize_path('/data/f'))
		assert split_url('https://ep1') == ('https://ep1', ROOT)
		assert split_url('https://[::1]:8443/x')[0] == 'https://[::1]:8443'
	
	@pytest.mark.parametrize('url', ['http://host/x', 'ftp://host/x', '/relative', 'https:///nohost', 'https://host:99999/'])
	def test_split_rejects(self, url):
		with pytest.raises(TpcError) as exc:
			split_url(url)
		
		assert exc.value.kind is Kind.BAD_REQUEST
	
	def test_join_quotes(self):
		assert join_url('https://ep/', normalize_path('/a b/c')) == 'https://ep/a%20b/c'
		assert join_url('https://ep', ROOT) == 'https://ep/'
	
	@given(raw_paths)
	def test_join_then_split(self, raw):
		path = normalize_path(raw)
		assert split_url(join_url('https://ep:1', path)) == ('https://ep:1', path)
