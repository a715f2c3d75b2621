# plcforge
# MIT License
#
# Copyright (c) 2026 The plcforge developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
# A minimal record/file wrapper for ducktools.classbuilder
# Records are stored one per line, fields joined by the ASCII unit separator,
# grouped under [section] headers. Only the features plcforge needs are implemented.

import os
import itertools
import shutil

from ducktools.classbuilder import (
    SlotMakerMeta,
    builder,
    make_unified_gatherer,
)
from ducktools.classbuilder.prefab import (
    PREFAB_FIELDS,
    Attribute,
    as_dict,
    eq_maker,
    get_attributes,
    init_maker,
    repr_maker,
)

from .exceptions import InvalidRecord, IoFailure


TYPE_CHECKING = False
if TYPE_CHECKING:
    from typing import dataclass_transform
else:
    def dataclass_transform(
        *,
        eq_default=True,
        order_default=False,
        kw_only_default=False,
        frozen_default=False,
        field_specifiers=(),
        **kwargs
    ):
        def decorator(cls_or_fn):
            cls_or_fn.__dataclass_transform__ = {
                "eq_default": eq_default,
                "order_default": order_default,
                "kw_only_default": kw_only_default,
                "frozen_default": frozen_default,
                "field_specifiers": field_specifiers,
                "kwargs": kwargs,
            }
            return cls_or_fn
        return decorator


FIELD_SEPARATOR = "\x1f"
FORBIDDEN_CHARACTERS = frozenset({FIELD_SEPARATOR, "\n", "\r"})

# Field types that can be written to a record line
TYPE_MAP = {
    int: int,
    str: str,
    str | None: str,
}

MAPPED_TYPES = int | str | None


class RecordAttribute(Attribute):
    """
    A Special attribute for record sections

    :param primary_key: This field identifies the record within its section
    :param unique: Should this field be unique in the section
    :param internal: Should this field be excluded from the stored line
    """
    primary_key: bool = False
    unique: bool = False
    internal: bool = False

    def validate_field(self):
        super().validate_field()
        if self.primary_key and self.unique:
            raise AttributeError("Primary key fields are already unique")


def get_record_fields(cls: "RecordMeta", local=False) -> dict[str, RecordAttribute]:
    attribs = get_attributes(cls, local=local)
    parents = RecordAttribute.__mro__[1:-1]  # remove object and self
    attributes = {
        k: RecordAttribute.from_field(v) if type(v) in parents else v
        for k, v in attribs.items()
    }
    return attributes  # type: ignore


unified_gatherer = make_unified_gatherer(RecordAttribute)


def caps_to_snake(name: str):
    letters = [name[0].lower()]
    for previous, current in itertools.pairwise(name):
        if current.isupper() and not previous.isupper():
            letters.append("_")
        letters.append(current.lower())
    return "".join(letters)


def encode_value(value: MAPPED_TYPES) -> str:
    if value is None:
        return ""
    text = str(value)
    if FORBIDDEN_CHARACTERS.intersection(text):
        raise InvalidRecord(f"Field value {text!r} contains a separator or line break")
    return text


class RecordMeta(SlotMakerMeta):
    SECTION: str
    VALID_FIELDS: dict[str, RecordAttribute]
    PK_NAME: str
    INT_COLUMNS: set[str]
    OPTIONAL_COLUMNS: set[str]


default_methods = frozenset({init_maker, repr_maker, eq_maker})


@dataclass_transform(kw_only_default=True, field_specifiers=(RecordAttribute,))
class RecordClass(metaclass=RecordMeta):
    _meta_gatherer = unified_gatherer
    __slots__ = {}

    def __init_subclass__(
        cls,
        *,
        section: str | None = None,
        methods=default_methods,
        gatherer=unified_gatherer,
        **kwargs,
    ):
        slots = "__slots__" in cls.__dict__

        builder(
            cls,
            gatherer=gatherer,
            methods=methods,
            flags={"slotted": slots, "kw_only": True},
            field_getter=get_record_fields,
        )  # type: ignore

        fields = get_record_fields(cls)
        valid_fields = {}
        int_columns = set()
        optional_columns = set()

        for name, value in fields.items():
            if not value.internal:
                valid_fields[name] = value

            v_type = value.type
            if isinstance(v_type, str):
                v_type = eval(v_type)

            if v_type not in TYPE_MAP:
                raise TypeError(f"Field {name!r} has unsupported record type {v_type!r}")

            if v_type is int:
                int_columns.add(name)
            elif v_type == str | None:
                optional_columns.add(name)

        cls.VALID_FIELDS = valid_fields
        cls.INT_COLUMNS = int_columns
        cls.OPTIONAL_COLUMNS = optional_columns

        setattr(cls, PREFAB_FIELDS, list(fields.keys()))

        primary_key = None
        for name, field in fields.items():
            if field.primary_key:
                if primary_key is not None:
                    raise AttributeError("RecordClass *must* have **only** one primary key")
                primary_key = name

        if primary_key is None:
            raise AttributeError("RecordClass *must* have one primary key")

        cls.PK_NAME = primary_key
        cls.SECTION = section if section else caps_to_snake(cls.__name__)

        super().__init_subclass__(**kwargs)

    @property
    def primary_key(self):
        """
        Get the actual value of the primary key on an instance.
        """
        return getattr(self, self.PK_NAME)

    def to_line(self) -> str:
        values = as_dict(self)
        return FIELD_SEPARATOR.join(
            encode_value(values[name]) for name in self.VALID_FIELDS
        )

    @classmethod
    def from_line(cls, line: str):
        parts = line.split(FIELD_SEPARATOR)
        if len(parts) != len(cls.VALID_FIELDS):
            raise InvalidRecord(
                f"[{cls.SECTION}] expected {len(cls.VALID_FIELDS)} fields, got {len(parts)}"
            )

        kwargs = {}
        for key, value in zip(cls.VALID_FIELDS, parts, strict=True):
            if key in cls.INT_COLUMNS:
                try:
                    kwargs[key] = int(value)
                except ValueError:
                    raise InvalidRecord(f"[{cls.SECTION}] field {key!r} is not an integer: {value!r}")
            elif key in cls.OPTIONAL_COLUMNS:
                kwargs[key] = value if value else None
            else:
                kwargs[key] = value

        return cls(**kwargs)  # noqa

    @classmethod
    def select_rows(cls, book: "RecordBook", filters: dict[str, MAPPED_TYPES] | None = None):
        filters = {} if filters is None else filters
        for key in filters:
            if key not in cls.VALID_FIELDS:
                raise KeyError(f"{key} is not a valid field for section {cls.SECTION}")

        rows = [cls.from_line(line) for line in book.lines(cls.SECTION)]
        return [
            row for row in rows
            if all(getattr(row, k) == v for k, v in filters.items())
        ]

    @classmethod
    def select_row(cls, book: "RecordBook", filters: dict[str, MAPPED_TYPES] | None = None):
        rows = cls.select_rows(book, filters)
        return rows[0] if rows else None

    @classmethod
    def row_from_pk(cls, book: "RecordBook", pk_value):
        return cls.select_row(book, filters={cls.PK_NAME: pk_value})

    @classmethod
    def max_pk(cls, book: "RecordBook"):
        return max((row.primary_key for row in cls.select_rows(book)), default=None)

    def _check_unique(self, rows):
        for row in rows:
            if row.primary_key == self.primary_key:
                raise InvalidRecord(
                    f"[{self.SECTION}] duplicate {self.PK_NAME} {self.primary_key!r}"
                )
            for name, field in self.VALID_FIELDS.items():
                if field.unique and getattr(row, name) == getattr(self, name):
                    raise InvalidRecord(
                        f"[{self.SECTION}] duplicate {name} {getattr(self, name)!r}"
                    )

    def insert_row(self, book: "RecordBook"):
        if self.primary_key is None:
            raise AttributeError("Primary key has not yet been set")

        self._check_unique(self.select_rows(book))
        book.set_lines(self.SECTION, [*book.lines(self.SECTION), self.to_line()])

    def update_row(self, book: "RecordBook"):
        lines = []
        found = False
        for row in self.select_rows(book):
            if row.primary_key == self.primary_key:
                lines.append(self.to_line())
                found = True
            else:
                lines.append(row.to_line())

        if not found:
            raise KeyError(f"[{self.SECTION}] no row with {self.PK_NAME} {self.primary_key!r}")

        book.set_lines(self.SECTION, lines)

    def delete_row(self, book: "RecordBook"):
        if self.primary_key is None:
            raise AttributeError("Primary key has not yet been set")

        book.set_lines(
            self.SECTION,
            [
                row.to_line()
                for row in self.select_rows(book)
                if row.primary_key != self.primary_key
            ],
        )


class RecordBook:
    """
    The parsed contents of a record file: section name -> record lines
    """
    def __init__(self, sections: dict[str, list[str]] | None = None):
        self.sections = {} if sections is None else sections
        self.dirty = False

    def lines(self, section: str) -> list[str]:
        return list(self.sections.get(section, []))

    def set_lines(self, section: str, lines: list[str]):
        self.sections[section] = list(lines)
        self.dirty = True

    @classmethod
    def loads(cls, text: str):
        sections: dict[str, list[str]] = {}
        current = None
        for raw_line in text.split("\n"):
            line = raw_line.rstrip("\r")
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1]
                sections.setdefault(current, [])
            elif current is None:
                raise InvalidRecord(f"Record line outside of any section: {line!r}")
            else:
                sections[current].append(line)
        return cls(sections)

    def dumps(self) -> str:
        chunks = []
        for section, lines in self.sections.items():
            chunks.append(f"[{section}]")
            chunks.extend(lines)
        return "\n".join(chunks) + "\n"

    @classmethod
    def load(cls, path: str):
        try:
            with open(path, "r", encoding="utf-8", newline="") as f:
                text = f.read()
        except FileNotFoundError:
            raise
        except OSError as e:
            raise IoFailure(f"Could not read record file {path!r}: {e}")
        return cls.loads(text)

    def save(self, path: str):
        temp_path = f"{path}.tmp"
        try:
            with open(temp_path, "w", encoding="utf-8", newline="") as f:
                f.write(self.dumps())
            if os.path.exists(path):
                shutil.copymode(path, temp_path)
            os.replace(temp_path, path)
        except OSError as e:
            raise IoFailure(f"Could not write record file {path!r}: {e}")
        self.dirty = False


class RecordContext:
    """
    A simple context manager that loads a record file and writes it back if changed
    """
    def __init__(self, path: str):
        self.path = path
        self.book = None

    def __enter__(self) -> RecordBook:
        self.book = RecordBook.load(self.path)
        return self.book

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self.book is not None:
            if exc_type is None and self.book.dirty:
                self.book.save(self.path)
            self.book = None
