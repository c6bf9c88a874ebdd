"""
Base classes to be extended
"""
from abc import abstractmethod, ABC
from collections.abc import MutableSequence
from lxml import etree


class XMLComparableBase(ABC):
    """
    Something that serializes to an XML element and compares by that
    serialization
    """

    def __str__(self):
        return str(etree.tostring(self.element()), "utf-8")

    def __lt__(self, other):
        return str(self) < str(other)

    def __eq__(self, other):
        if not isinstance(other, XMLComparableBase):
            return NotImplemented
        return str(self) == str(other)

    def __hash__(self):
        return hash(str(self))

    def __repr__(self):
        props = {p: repr(getattr(self, p)) for p in dir(type(self))
                 if isinstance(getattr(type(self), p), property)}

        return "{name}({prop})".format(
            name=type(self).__name__,
            prop=", ".join(["{k}={v}".format(k=k, v=v)
                            for k, v in sorted(props.items())])
        )

    def pretty_print(self, **kwargs):
        """
        Pretty print XML
        """
        kwargs.setdefault("pretty_print", True)
        kwargs.setdefault("encoding", "utf-8")
        kwargs.setdefault("xml_declaration", True)
        return etree.tostring(self.element(), **kwargs)

    # element and parse must be overriden
    @abstractmethod
    def element(self):
        pass

    @staticmethod
    @abstractmethod
    def parse(xml):
        pass


class XMLListBase(MutableSequence, XMLComparableBase):
    """Base list class to be extended, check() guards every insertion"""

    def __init__(self, *args):
        self._list = []
        if len(args) == 1 and isinstance(args[0], (list, tuple)):
            self.extend(args[0])
        else:
            self.extend(args)

    def __len__(self):
        return len(self._list)

    def __getitem__(self, index):
        return self._list[index]

    def __setitem__(self, index, value):
        self.check(value)
        self._list[index] = value

    def __delitem__(self, index):
        del self._list[index]

    def insert(self, index, value):
        self.check(value)
        self._list.insert(index, value)

    __hash__ = XMLComparableBase.__hash__

    @abstractmethod
    def check(self, value):
        pass
