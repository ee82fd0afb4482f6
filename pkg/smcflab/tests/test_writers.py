#    Licensed under the Apache License, Version 2.0 (the "License"); you may
#    not use this file except in compliance with the License. You may obtain
#    a copy of the License at
#
#         http://www.apache.org/licenses/LICENSE-2.0
#
#    Unless required by applicable law or agreed to in writing, software
#    distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
#    WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
#    License for the specific language governing permissions and limitations
#    under the License.

import os.path

import fixtures
import yaml

from smcflab import config, diagnostics, snapshot, writers
from smcflab.tests import base


def _record(t, **values):
    row = {name: 0.0 for name in diagnostics.COLUMNS}
    row.update(values, t=t)
    return diagnostics.DiagnosticsRecord(**row)


def _config(output):
    data = yaml.safe_load(base.CONFIG)
    data["output"] = output
    return config.build_config(data, environ={})


class TestMemorySink(base.TestCase):
    def test_keeps_records(self):
        sink = writers.MemorySink()
        sink.write_record(_record(0.0))
        sink.write_record(_record(0.5, l2=1.0))
        self.assertEqual([0.0, 0.5], [r.t for r in sink.records])

    def test_rejects_out_of_order(self):
        sink = writers.MemorySink()
        sink.write_record(_record(1.0))
        self.assertRaises(ValueError, sink.write_record, _record(1.0))
        self.assertRaises(ValueError, sink.write_record, _record(0.5))
        self.assertEqual(1, len(sink.records))

    def test_snapshots(self):
        sink = writers.MemorySink()
        field = base.bump(16)
        sink.write_snapshot(field, 0.25, 3)
        self.assertEqual([(0.25, field)], sink.snapshots)


class TestFileSink(base.TestCase):
    def setUp(self):
        super().setUp()
        self.tempdir = self.useFixture(fixtures.TempDir()).path
        self.out = os.path.join(self.tempdir, "run")

    def test_creates_directory_and_header(self):
        cfg = _config({"dir": self.out})
        with writers.open_sink(cfg) as sink:
            self.assertIsInstance(sink, writers.FileSink)
            self.assertTrue(os.path.isdir(self.out))
            self.assertEqual(os.path.join(self.out, "series.csv"), sink.series_path)
        with open(sink.series_path, encoding="utf-8") as f:
            self.assertEqual(",".join(diagnostics.COLUMNS), f.read().strip())

    def test_series_round_trip(self):
        cfg = _config({"dir": self.out, "series_name": "diag.csv"})
        records = [
            diagnostics.record(base.bump(16), 0.0, diagnostics.parameter_plan(2)),
            _record(0.1, l2=0.1 + 0.2, volume=576.0),
        ]
        with writers.open_sink(cfg) as sink:
            for rec in records:
                sink.write_record(rec)
        self.assertEqual(records, writers.read_series(sink.series_path))

    def test_rows_are_flushed(self):
        cfg = _config({"dir": self.out})
        sink = writers.open_sink(cfg)
        self.addCleanup(sink.close)
        sink.write_record(_record(0.0))
        self.assertEqual(1, len(writers.read_series(sink.series_path)))

    def test_default_snapshot_name(self):
        cfg = _config({"dir": self.out})
        with writers.open_sink(cfg) as sink:
            self.assertEqual("snapshot_00001.5000.smcf", sink.snapshot_name(1.5, 7))
            self.assertEqual("snapshot_00000.0000.smcf", sink.snapshot_name(0.0, 0))

    def test_custom_template(self):
        cfg = _config(
            {
                "dir": self.out,
                "snapshot_prefix": "state",
                "snapshot_template": "{{ prefix }}-{{ step }}.smcf",
            }
        )
        with writers.open_sink(cfg) as sink:
            self.assertEqual("state-12.smcf", sink.snapshot_name(0.3, 12))

    def test_write_snapshot(self):
        cfg = _config({"dir": self.out})
        field = base.bump(16)
        with writers.open_sink(cfg) as sink:
            sink.write_snapshot(field, 2.0, 40)
        self.assertEqual(
            [os.path.join(self.out, "snapshot_00002.0000.smcf")], sink.snapshot_paths
        )
        loaded, t = snapshot.read_snapshot(sink.snapshot_paths[0])
        self.assertEqual(2.0, t)
        self.assertEqual(field.values.tobytes(), loaded.values.tobytes())

    def test_close_twice(self):
        sink = writers.open_sink(_config({"dir": self.out}))
        sink.close()
        sink.close()


class TestOpenSink(base.TestCase):
    def test_memory_without_directory(self):
        sink = writers.open_sink(_config({"dir": None}))
        self.assertIsInstance(sink, writers.MemorySink)

    def test_environment_override(self):
        tempdir = self.useFixture(fixtures.TempDir()).path
        data = yaml.safe_load(base.CONFIG)
        cfg = config.build_config(data, environ={config.OUTPUT_DIR_ENV: tempdir})
        with writers.open_sink(cfg) as sink:
            self.assertEqual(tempdir, sink.directory)


class TestReadSeries(base.TestCase):
    def test_missing_columns(self):
        tempdir = self.useFixture(fixtures.TempDir()).path
        path = os.path.join(tempdir, "series.csv")
        with open(path, "w", encoding="utf-8") as f:
            f.write("t,l2\n0.0,1.0\n")
        with self.assertRaises(ValueError) as cm:
            writers.read_series(path)
        self.assertIn("missing columns", str(cm.exception))
        self.assertIn("volume", str(cm.exception))
