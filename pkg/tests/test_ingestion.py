import pytest

from deidkit.ingestion import (
    EmptyLexicon,
    MissingTextElement,
    MultipleTextElements,
    SpanMismatch,
    UnknownCategory,
    XmlMalformed,
    document_to_xml,
    load_gold_annotations,
    load_letter_xml,
    load_lexicon_csv,
    load_lexicon_txt,
)
from deidkit.types import Document, EntityType, SpanSource, validate_spans

LETTER = b"<root><TEXT><![CDATA[Record of Dr. Beverly]]></TEXT></root>"


class TestLoadLetterXml:
    def test_cdata_extraction(self):
        doc = load_letter_xml(LETTER, doc_id="a")
        assert doc.text == "Record of Dr. Beverly"

    def test_plain_text_content(self):
        doc = load_letter_xml(b"<root><TEXT>hello\nworld</TEXT></root>")
        assert doc.text == "hello\nworld"

    def test_missing_text_element(self):
        with pytest.raises(MissingTextElement):
            load_letter_xml(b"<root></root>")

    def test_multiple_text_elements(self):
        with pytest.raises(MultipleTextElements):
            load_letter_xml(b"<root><TEXT>a</TEXT><TEXT>b</TEXT></root>")

    def test_malformed(self):
        with pytest.raises(XmlMalformed):
            load_letter_xml(b"<root><TEXT>")

    def test_round_trip(self):
        doc = load_letter_xml(LETTER, doc_id="a")
        again = load_letter_xml(document_to_xml(doc), doc_id="a")
        assert again.text == doc.text


GOLD = (
    b"<deIdi2b2><TEXT><![CDATA[Record of Dr. Beverly at Mercy Hospital]]></TEXT>"
    b'<TAGS>'
    b'<NAME id="P0" start="14" end="21" text="Beverly" TYPE="DOCTOR"/>'
    b'<LOCATION id="P1" start="25" end="39" text="Mercy Hospital" TYPE="HOSPITAL"/>'
    b"</TAGS></deIdi2b2>"
)


class TestGoldAnnotations:
    def test_doctor_maps_to_name(self):
        doc = load_letter_xml(GOLD, doc_id="g")
        gold = load_gold_annotations(GOLD, doc)
        assert [(s.etype, s.surface) for s in gold.spans] == [
            (EntityType.NAME, "Beverly"),
            (EntityType.LOCATION, "Mercy Hospital"),
        ]
        assert all(s.source is SpanSource.MANUAL for s in gold.spans)

    def test_spans_validate(self):
        doc = load_letter_xml(GOLD, doc_id="g")
        gold = load_gold_annotations(GOLD, doc)
        assert validate_spans(doc, list(gold.spans)) == sorted(gold.spans)

    def test_empty_annotation_set(self):
        data = b"<deIdi2b2><TEXT>x</TEXT><TAGS></TAGS></deIdi2b2>"
        gold = load_gold_annotations(data, load_letter_xml(data))
        assert gold.spans == ()

    def test_unknown_category(self):
        data = (
            b"<deIdi2b2><TEXT>abcdef</TEXT><TAGS>"
            b'<WEIRD start="0" end="3" text="abc" TYPE="MYSTERY"/>'
            b"</TAGS></deIdi2b2>"
        )
        with pytest.raises(UnknownCategory):
            load_gold_annotations(data, load_letter_xml(data))

    def test_text_attribute_mismatch(self):
        data = (
            b"<deIdi2b2><TEXT>abcdef</TEXT><TAGS>"
            b'<NAME start="0" end="3" text="zzz" TYPE="PATIENT"/>'
            b"</TAGS></deIdi2b2>"
        )
        with pytest.raises(SpanMismatch):
            load_gold_annotations(data, load_letter_xml(data))


class TestLexicons:
    def test_dedupe_preserves_order(self):
        lex = load_lexicon_csv(b"Smith\nJones\nSmith\n", EntityType.NAME)
        assert lex.entries == ("Smith", "Jones")

    def test_case_insensitive_dedupe_keeps_first_spelling(self):
        lex = load_lexicon_csv(b"Smith\nSMITH\njones\n", EntityType.NAME)
        assert lex.entries == ("Smith", "jones")

    def test_empty_file(self):
        with pytest.raises(EmptyLexicon):
            load_lexicon_csv(b"", EntityType.NAME)

    def test_header_detection(self):
        lex = load_lexicon_csv(b"name\nGarcia\n", EntityType.NAME)
        assert lex.entries == ("Garcia",)

    def test_header_detection_is_case_insensitive(self):
        lex = load_lexicon_csv(b"NAME\nGarcia\n", EntityType.NAME)
        assert lex.entries == ("Garcia",)

    def test_quoted_first_column(self):
        lex = load_lexicon_csv(b'"Saint-Luc, Hospital",extra\nRiverton,2\n', EntityType.LOCATION)
        assert lex.entries == ("Saint-Luc, Hospital", "Riverton")

    def test_txt_one_per_line(self):
        lex = load_lexicon_txt(b"carpenter\n\n  baker \n", EntityType.PROFESSION)
        assert lex.entries == ("carpenter", "baker")
