import email
import json
import sys
from email import policy
from email._header_value_parser import get_unstructured

CASES = [
    ("security_alert", "=?UTF-8?B?U2VjdXJpdHkgQWxlcnQh?="),
    ("plain_ascii", "Quarterly report"),
    ("b_utf8_word", "=?utf-8?b?SGVsbG8=?="),
    ("q_utf8_word", "=?UTF-8?Q?Caf=C3=A9_ouvert?="),
    ("q_latin1", "=?ISO-8859-1?Q?caf=E9?="),
    ("b_latin1", "=?iso-8859-1?B?Y2Fm6Q==?="),
    ("q_underscore_space", "=?utf-8?q?Your_account_is_locked?="),
    ("prefix_literal", "Re: =?utf-8?q?Rechnung_f=C3=BCr_Mai?="),
    ("suffix_literal", "=?utf-8?b?8J+TpiBQYWtldA==?= versandt"),
    ("adjacent_words_space", "=?utf-8?q?Sicherheits?= =?utf-8?q?hinweis?="),
    ("adjacent_words_folded", "=?utf-8?q?Konto_?=\r\n =?utf-8?q?gesperrt?="),
    ("split_multibyte_b", "=?UTF-8?B?5pel5pys?= =?UTF-8?B?6Kqe?="),
    ("mixed_charsets", "=?iso-8859-1?q?d=E9j=E0?= =?utf-8?q?_vu?="),
    ("language_tag", "=?UTF-8*en?Q?lang_tag?="),
    ("japanese_b", "=?UTF-8?B?44CQ6YeN6KaB44CR44Ki44Kr44Km44Oz44OI56K66KqN?="),
    ("cyrillic_koi8", "=?koi8-r?B?8NLJ18XU?="),
    ("windows1252_q", "=?windows-1252?Q?=93Quoted=94_text?="),
    ("q_equals_literal", "=?utf-8?q?a=3Db?="),
    ("q_question_hex", "=?utf-8?q?Ready=3F?="),
    ("two_words_with_text_between", "=?utf-8?q?A?= and =?utf-8?q?B?="),
    ("unpadded_base64", "=?utf-8?b?UGF5cGFs?="),
    ("emoji_b", "=?utf-8?B?8J+UkiBWZXJpZnkgbm93?="),
    ("email_address_after", "=?utf-8?q?Support_Team?= <support@example.com>"),
    ("malformed_unknown_encoding", "=?utf-8?X?abc?="),
    ("malformed_unterminated", "=?utf-8?q?never_closed"),
    ("malformed_bad_base64", "=?utf-8?b?!!!!?="),
    ("malformed_missing_charset", "=??q?abc?="),
    ("literal_question_marks", "Why? What? =?utf-8?q?Now?="),
    ("gb2312_b", "=?gb2312?B?1tDOxA==?="),
    ("multiple_spaces_between", "=?utf-8?Q?a?=   =?utf-8?Q?b?="),
]

BASE64_DEFECTS = ("InvalidBase64CharactersDefect", "InvalidBase64PaddingDefect", "InvalidBase64LengthDefect")


def oracle(value):
    """Decoded Subject as parsed from a one-header message; the raw value
    when decoding raises or reports a base64 defect."""
    try:
        msg = email.message_from_string("Subject: " + value + "\r\n\r\n", policy=policy.default)
        raw_unfolded = msg._headers[0][1]
        if any(type(d).__name__ in BASE64_DEFECTS for d in get_unstructured(raw_unfolded).all_defects):
            return value
        return str(msg["Subject"])
    except Exception:
        return value


if __name__ == "__main__":
    out = []
    for name, raw in CASES:
        out.append({"name": name, "raw": raw, "expected": oracle(raw)})
    json.dump(out, sys.stdout, ensure_ascii=False, indent=1)
