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

"""Name based registries for the pluggable classes."""


def _all_subclasses(cls):
    direct = cls.__subclasses__()
    yield from direct
    for d in direct:
        yield from _all_subclasses(d)


def make_lookup_table(cls, attr_name):
    """Map the ``attr_name`` value of ``cls`` and its subclasses to the class.

    Classes without a value are skipped. Two classes claiming the same
    value is a programming error.

    """
    table = {}
    candidates = [cls] + list(_all_subclasses(cls))
    for subcls in candidates:
        name = getattr(subcls, attr_name, None)
        if not name:
            continue
        # subclasses inherit the attribute; only the declaring class counts
        if name != subcls.__dict__.get(attr_name, None):
            continue
        if name in table and table[name] is not subcls:
            raise ValueError(
                "{} {!r} claimed by both {} and {}".format(
                    attr_name, name, table[name].__name__, subcls.__name__
                )
            )
        table[name] = subcls
    return table


def lookup(table, name, kind):
    "Return the class registered as ``name`` or raise ValueError."
    try:
        return table[name]
    except (KeyError, TypeError):
        raise ValueError(
            "unrecognized {} {!r}, expected one of {}".format(
                kind, name, ", ".join(sorted(table))
            )
        )
