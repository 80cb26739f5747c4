"""
The knowledge base shared by sender and receiver.

File format (UTF-8, tab separated), sections introduced by header lines:

    #ENTITY
    Alan_Turing<TAB>Turing<TAB>A. M. Turing
    #RELATION
    Alan_Turing<TAB>born_in<TAB>London
    #TEMPLATE
    born_in<TAB>{head} was born in {tail}.

Any other line starting with '#' is a comment. A canonical name is always its
own alias, and so is its underscore-to-space form.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .corpus import tokenize
from .errors import ValidationError
from .logger import logger

PathLike = Union[str, Path]
Triple = Tuple[str, str, str]

ENTITY_SECTION = '#ENTITY'
RELATION_SECTION = '#RELATION'
TEMPLATE_SECTION = '#TEMPLATE'
_SECTIONS = (ENTITY_SECTION, RELATION_SECTION, TEMPLATE_SECTION)


def display_name(name: str) -> str:
    return name.replace('_', ' ')


def default_template(relation: str) -> str:
    return f'{{head}} {display_name(relation)} {{tail}}.'


def _fold(surface: str) -> str:
    return ' '.join(tokenize(surface))


@dataclass(frozen=True)
class KnowledgeBase:
    entities: Dict[str, Tuple[str, ...]]        # canonical -> explicit aliases
    relations: Tuple[Triple, ...]
    templates: Dict[str, str]
    _exact: Dict[str, str] = field(init=False, compare=False, repr=False)
    _folded: Dict[str, str] = field(init=False, compare=False, repr=False)
    _adjacency: Dict[str, List[Tuple[str, str]]] = field(init=False, compare=False, repr=False)
    _directed: Dict[Tuple[str, str], List[str]] = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'relations', tuple(sorted(set(self.relations))))
        exact: Dict[str, str] = {}
        folded: Dict[str, str] = {}
        for canonical, aliases in self.entities.items():
            for alias in (canonical, display_name(canonical)) + tuple(aliases):
                exact.setdefault(alias, canonical)
                key = _fold(alias)
                if not key:
                    continue
                owner = folded.setdefault(key, canonical)
                if owner != canonical:
                    logger.warning(f'kb: "{alias}" folds to "{key}", already owned by {owner}, kept {owner}')
        adjacency: Dict[str, set] = {}
        directed: Dict[Tuple[str, str], List[str]] = {}
        for head, relation, tail in self.relations:
            adjacency.setdefault(head, set()).add((tail, relation))
            adjacency.setdefault(tail, set()).add((head, relation))
            directed.setdefault((head, tail), []).append(relation)
        object.__setattr__(self, '_exact', exact)
        object.__setattr__(self, '_folded', folded)
        object.__setattr__(self, '_adjacency', {k: sorted(v) for k, v in adjacency.items()})
        object.__setattr__(self, '_directed', directed)

    @classmethod
    def empty(cls) -> 'KnowledgeBase':
        return cls({}, (), {})

    def __contains__(self, canonical: str) -> bool:
        return canonical in self.entities

    def lookup(self, surface: str) -> Optional[str]:
        """Canonical name for a surface form: exact alias first, then case/punctuation-insensitive."""
        canonical = self._exact.get(surface)
        if canonical is None:
            canonical = self._folded.get(_fold(surface))
        return canonical

    def aliases(self, canonical: str) -> List[str]:
        """Every surface form of an entity, longest first."""
        forms = {canonical, display_name(canonical), *self.entities.get(canonical, ())}
        return sorted(forms, key=lambda s: (-len(s), s))

    def template_for(self, relation: str) -> str:
        return self.templates.get(relation) or default_template(relation)

    def relations_between(self, head: str, tail: str) -> List[str]:
        """Relation labels asserted from head to tail, sorted."""
        return self._directed.get((head, tail), [])


def one_hop(kb: KnowledgeBase, entity: str) -> List[Tuple[str, str]]:
    """(neighbor, relation) for every relation touching `entity`, sorted; unknown entity gives []."""
    return list(kb._adjacency.get(entity, ()))


def parse_kb(lines: Sequence[str], source: str = '<kb>') -> KnowledgeBase:
    entities: Dict[str, Tuple[str, ...]] = {}
    alias_owner: Dict[str, str] = {}
    relations: List[Tuple[int, Triple]] = []
    templates: Dict[str, str] = {}
    section = ''
    for line_no, raw in enumerate(lines, 1):
        line = raw.rstrip('\r\n')
        if not line.strip():
            continue
        if line.startswith('#'):
            header = line.strip().upper()
            if header in _SECTIONS:
                section = header
            continue
        fields = [f.strip() for f in line.split('\t')]
        if section == ENTITY_SECTION:
            canonical, aliases = fields[0], tuple(a for a in fields[1:] if a)
            if not canonical:
                raise ValidationError(line_no, 'empty canonical name')
            if canonical in entities:
                raise ValidationError(line_no, f'entity {canonical} declared twice')
            for alias in (canonical, display_name(canonical)) + aliases:
                owner = alias_owner.setdefault(alias, canonical)
                if owner != canonical:
                    raise ValidationError(line_no, f'alias "{alias}" maps to both {owner} and {canonical}')
            entities[canonical] = aliases
        elif section == RELATION_SECTION:
            if len(fields) != 3 or not all(fields):
                raise ValidationError(line_no, f'relation needs 3 fields, got {len(fields)}')
            relations.append((line_no, (fields[0], fields[1], fields[2])))
        elif section == TEMPLATE_SECTION:
            if len(fields) != 2 or not all(fields):
                raise ValidationError(line_no, 'template needs 2 fields: relation, template')
            templates[fields[0]] = fields[1]
        else:
            raise ValidationError(line_no, 'data line outside any section')
    # endpoints are checked after the whole file so sections may come in any order
    for line_no, (head, _, tail) in relations:
        for endpoint in (head, tail):
            if endpoint not in entities:
                raise ValidationError(line_no, f'relation endpoint {endpoint} is not a KB entity')
    kb = KnowledgeBase(entities, tuple(t for _, t in relations), templates)
    logger.info(f'loaded kb {source}: {len(kb.entities)} entities, {len(kb.relations)} relations, '
                f'{len(kb.templates)} templates')
    return kb


def load_kb(path: PathLike) -> KnowledgeBase:
    with open(path, encoding='utf-8') as fin:
        return parse_kb(fin.readlines(), str(path))


def write_kb(kb: KnowledgeBase, path: PathLike) -> None:
    lines = [ENTITY_SECTION]
    for canonical, aliases in kb.entities.items():
        lines.append('\t'.join((canonical,) + tuple(aliases)))
    lines.append(RELATION_SECTION)
    lines.extend('\t'.join(triple) for triple in kb.relations)
    lines.append(TEMPLATE_SECTION)
    lines.extend(f'{relation}\t{template}' for relation, template in kb.templates.items())
    Path(path).write_text('\n'.join(lines) + '\n', encoding='utf-8')
