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

"""Destinations for diagnostics records and snapshots."""

import abc
import csv
import logging
import os

import jinja2

from smcflab import diagnostics, snapshot

LOG = logging.getLogger(__name__)


def open_sink(cfg):
    "Open the sink selected by the output section of the configuration."
    if cfg.output.dir:
        return FileSink(cfg)
    return MemorySink(cfg)


def read_series(path):
    "Load a series file written by FileSink."
    path = os.path.expanduser(path)
    LOG.debug("reading series %s", path)
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        missing = set(diagnostics.COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(
                "{}: missing columns {}".format(path, ", ".join(sorted(missing)))
            )
        return [diagnostics.DiagnosticsRecord.from_row(row) for row in reader]


class Sink(metaclass=abc.ABCMeta):
    _log = logging.getLogger(__name__)

    def __init__(self, cfg):
        self._cfg = cfg
        self.records = []

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False

    def write_record(self, record):
        "Accept one diagnostics record, in increasing time order."
        if self.records and record.t <= self.records[-1].t:
            raise ValueError(
                "record at t={} does not follow t={}".format(record.t, self.records[-1].t)
            )
        self.records.append(record)
        self._store_record(record)

    @abc.abstractmethod
    def _store_record(self, record):
        pass

    @abc.abstractmethod
    def write_snapshot(self, field, t, step):
        """Store a state.

        :param field: the state
        :type field: smcflab.grid.Field
        :param t: solver time
        :type t: float
        :param step: solver step count
        :type step: int

        """

    def flush(self):
        pass

    def close(self):
        pass


class MemorySink(Sink):
    "Keep everything in lists."

    def __init__(self, cfg=None):
        super().__init__(cfg)
        self.snapshots = []

    def _store_record(self, record):
        pass

    def write_snapshot(self, field, t, step):
        self.snapshots.append((t, field))


class FileSink(Sink):
    "Write series.csv and snapshot files under the output directory."

    def __init__(self, cfg):
        super().__init__(cfg)
        out = cfg.output
        self.directory = os.path.expanduser(out.dir)
        os.makedirs(self.directory, exist_ok=True)
        self.series_path = os.path.join(self.directory, out.series_name)
        self.snapshot_paths = []
        self._template = jinja2.Template(out.snapshot_template)
        self._log.info("writing series to %s", self.series_path)
        self._file = open(self.series_path, "w", encoding="utf-8", newline="")
        self._writer = csv.writer(self._file)
        self._writer.writerow(diagnostics.COLUMNS)
        self._file.flush()

    def _store_record(self, record):
        self._writer.writerow([repr(float(value)) for value in record.as_row()])
        self._file.flush()

    def snapshot_name(self, t, step):
        return self._template.render(
            prefix=self._cfg.output.snapshot_prefix, t=t, step=step
        )

    def write_snapshot(self, field, t, step):
        path = os.path.join(self.directory, self.snapshot_name(t, step))
        self._log.debug("snapshot at t=%g step %d", t, step)
        snapshot.write_snapshot(path, field, t)
        self.snapshot_paths.append(path)

    def flush(self):
        self._file.flush()

    def close(self):
        if not self._file.closed:
            self._file.close()
