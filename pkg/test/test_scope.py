import pytest

from hypothesis import given, strategies as st

from web.tpc.exc import Kind, TpcError
from web.tpc.path import normalize_path
from web.tpc.scope import Activity, Scope, parse_scope


class TestScopeParsing(object):
	def test_download(self):
		scope = parse_scope('DOWNLOAD:/data/run1')
		assert scope == Scope(Activity.DOWNLOAD, normalize_path('/data/run1'))
		assert str(scope) == 'DOWNLOAD:/data/run1'
	
	def test_normalized(self):
		assert parse_scope('MANAGE:/a/../b') == Scope(Activity.MANAGE, normalize_path('/b'))
	
	@pytest.mark.parametrize('text', ['download:/x', 'READ:/x', 'DOWNLOAD', 'DOWNLOAD:/a:b', 'UPLOAD:/../x'])
	def test_rejected(self, text):
		with pytest.raises(TpcError) as exc:
			parse_scope(text)
		
		assert exc.value.kind is Kind.BAD_REQUEST
	
	def test_colon_paths_are_not_grantable(self):
		scope = Scope(Activity.LIST, normalize_path('/a:b'))
		
		assert not scope.grantable
		assert parse_scope('LIST:/').grantable
		assert parse_scope('LIST:/').covers(scope)
	
	def test_covering(self):
		assert Scope.covering(Activity.DOWNLOAD, normalize_path('/data/a:b/f')) == parse_scope('DOWNLOAD:/data')
		assert Scope.covering(Activity.DOWNLOAD, normalize_path('/data/f')) == parse_scope('DOWNLOAD:/data/f')
		assert Scope.covering(Activity.LIST, normalize_path('/a:b')) == parse_scope('LIST:/')
	
	@given(st.sampled_from(list(Activity)), st.lists(st.sampled_from(['a', 'b', 'run1', 'f 1', 'é']), max_size=4))
	def test_text_form_reproduces_value(self, activity, segments):
		scope = Scope(activity, normalize_path('/'.join(segments)))
		assert parse_scope(str(scope)) == scope


class TestCoverage(object):
	def test_same_activity_contained_path(self):
		assert parse_scope('DOWNLOAD:/data').covers(parse_scope('DOWNLOAD:/data/f'))
	
	def test_activity_mismatch(self):
		assert not parse_scope('DOWNLOAD:/data').covers(parse_scope('UPLOAD:/data'))
	
	def test_segment_wise(self):
		assert not parse_scope('DOWNLOAD:/data').covers(parse_scope('DOWNLOAD:/database'))
