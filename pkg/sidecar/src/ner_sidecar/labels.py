"""Tag set shared with the wire protocol; PAD never leaves the server."""

TAGS = ("O", "ID", "PHI", "NAME", "CONTACT", "DATE", "AGE", "PROFESSION", "LOCATION", "PAD")

TAG2ID = {tag: i for i, tag in enumerate(TAGS)}
ID2TAG = {i: tag for i, tag in enumerate(TAGS)}

IGNORE_INDEX = -100  # loss mask for special/padding positions

# i2b2 sub-categories grouped into the main types
CATEGORY_MAP = {
    "NAME": "NAME", "PATIENT": "NAME", "DOCTOR": "NAME", "USERNAME": "NAME",
    "PROFESSION": "PROFESSION",
    "LOCATION": "LOCATION", "HOSPITAL": "LOCATION", "ORGANIZATION": "LOCATION",
    "STREET": "LOCATION", "CITY": "LOCATION", "STATE": "LOCATION",
    "COUNTRY": "LOCATION", "ZIP": "LOCATION", "LOCATION-OTHER": "LOCATION",
    "AGE": "AGE",
    "DATE": "DATE",
    "CONTACT": "CONTACT", "PHONE": "CONTACT", "FAX": "CONTACT", "EMAIL": "CONTACT",
    "URL": "CONTACT", "IPADDR": "CONTACT", "IPADDRESS": "CONTACT", "PAGER": "CONTACT",
    "ID": "ID", "IDNUM": "ID", "MEDICALRECORD": "ID", "SSN": "ID",
    "SOCIALSECURITYNUMBER": "ID", "HEALTHPLAN": "ID", "ACCOUNT": "ID",
    "LICENSE": "ID", "VEHICLE": "ID", "DEVICE": "ID", "BIOID": "ID",
    "PHI": "PHI", "OTHER": "PHI",
}


class UnknownLabel(ValueError):
    def __init__(self, label: str):
        self.label = label
        super().__init__(f"unknown annotation label {label!r}")


def main_category(label: str) -> str:
    key = label.upper()
    if key not in CATEGORY_MAP:
        raise UnknownLabel(label)
    return CATEGORY_MAP[key]
