"""
Unit tests for the SQLite run archive.
"""

import os
import sys
import tempfile
import unittest
from unittest import mock

# Add src directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from storage import config_digest, get_report, is_recorded, list_runs, save_run


class TestConfigDigest(unittest.TestCase):
    """Test cases for config digests."""

    def test_ignores_output_locations(self):
        """Test that output paths do not change the digest."""
        base = {'command': 'certify', 'n_parties': 3, 'json_path': 'a.json', 'out_dir': '/tmp/a'}
        moved = dict(base, json_path='b.json', out_dir='/tmp/b')
        self.assertEqual(config_digest(base), config_digest(moved))

    def test_key_order_does_not_matter(self):
        """Test that key order does not change the digest."""
        self.assertEqual(config_digest({'a': 1, 'b': 2}), config_digest({'b': 2, 'a': 1}))
        self.assertNotEqual(config_digest({'a': 1}), config_digest({'a': 2}))


class TestRunArchive(unittest.TestCase):
    """Test cases for the SQLite archive."""

    def setUp(self):
        """Set up test fixtures."""
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        patcher = mock.patch.dict(os.environ, {'QUTRIT_DB_PATH': os.path.join(self.tmp.name, 'runs.db')})
        patcher.start()
        self.addCleanup(patcher.stop)

    def _record(self, digest, passed=True):
        return {
            'digest': digest,
            'command': 'prove',
            'n_parties': 4,
            'variant': 'oges',
            'passed': passed,
            'report': {'set_id': 'oges-N4', 'passed': passed},
        }

    def test_save_and_fetch(self):
        """Test saving and fetching a report."""
        self.assertFalse(is_recorded('abc'))
        save_run(self._record('abc'))
        self.assertTrue(is_recorded('abc'))
        self.assertEqual(get_report('abc'), {'set_id': 'oges-N4', 'passed': True})
        self.assertIsNone(get_report('missing'))

    def test_duplicate_digest_ignored(self):
        """Test that a second save of a digest is ignored."""
        save_run(self._record('abc'))
        save_run(self._record('abc', passed=False))
        runs = list_runs()
        self.assertEqual(len(runs), 1)
        self.assertTrue(runs[0]['passed'])

    def test_newest_first(self):
        """Test listing order and limit."""
        save_run(self._record('first'))
        save_run(self._record('second', passed=False))
        self.assertEqual([r['digest'] for r in list_runs()], ['second', 'first'])
        self.assertEqual(len(list_runs(limit=1)), 1)


if __name__ == '__main__':
    unittest.main()
