import pytest

from web.tpc.acl import ACL
from web.tpc.predicate import Predicate, always, never, Grants, Transfer, stat
from web.tpc.protocol import TransferMode
from web.tpc.scope import Activity

from helper import StubContext


class TestBasicPredicateBehaviour(object):
	def test_bare_predicate_fails(self):
		with pytest.raises(NotImplementedError):
			Predicate()()
	
	def test_always(self):
		assert always() is True
		assert repr(always) == 'always'
	
	def test_never(self):
		assert never() is False
		assert repr(never) == 'never'


class TestGrantsPredicate(object):
	def test_bad_arguments(self):
		with pytest.raises(TypeError):
			Grants()
		
		with pytest.raises(TypeError):
			Grants('UPLOAD')
	
	def test_granted(self):
		context = StubContext(Activity.MANAGE)
		
		assert Grants(Activity.UPLOAD, Activity.MANAGE)(context) is True
		assert context.asked == [Activity.UPLOAD, Activity.MANAGE]
	
	def test_abstains(self):
		assert Grants(Activity.UPLOAD, Activity.MANAGE)(StubContext(Activity.DOWNLOAD)) is None
	
	def test_stops_at_first_grant(self):
		context = StubContext(Activity.UPLOAD, Activity.MANAGE)
		Grants(Activity.UPLOAD, Activity.MANAGE)(context)
		
		assert context.asked == [Activity.UPLOAD]
	
	def test_stat_accepts_any_activity(self):
		for activity in Activity:
			assert stat(StubContext(activity)) is True
		
		assert stat(StubContext()) is None
	
	def test_repr(self):
		assert repr(Grants(Activity.UPLOAD, Activity.MANAGE)) == 'Grants(UPLOAD, MANAGE)'
	
	def test_denied_by_default(self):
		granted = ACL(Grants(Activity.DELETE), never, context=StubContext(Activity.DELETE))
		denied = ACL(Grants(Activity.DELETE), never, context=StubContext(Activity.UPLOAD))
		
		assert granted.is_authorized.result is True
		assert denied.is_authorized.result is False
		assert denied.is_authorized.predicate is never


class TestTransferPredicate(object):
	copy = Transfer(pull=Grants(Activity.UPLOAD, Activity.MANAGE), push=Grants(Activity.DOWNLOAD))
	
	def test_pull(self):
		assert self.copy(StubContext(Activity.UPLOAD, mode=TransferMode.PULL)) is True
		assert self.copy(StubContext(Activity.DOWNLOAD, mode=TransferMode.PULL)) is None
	
	def test_push(self):
		assert self.copy(StubContext(Activity.DOWNLOAD, mode=TransferMode.PUSH)) is True
		assert self.copy(StubContext(Activity.UPLOAD, mode=TransferMode.PUSH)) is None
	
	def test_no_mode_abstains(self):
		context = StubContext(*Activity)
		
		assert self.copy(context) is None
		assert context.asked == []

