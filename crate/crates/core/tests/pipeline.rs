use phishlens_core::pipeline::{interpret, prepare, PrepareOptions, DEFAULT_DUMMY_ADDRESS};
use phishlens_core::prompt::{extract_email_slot, PromptVariant};
use phishlens_core::tokens::Approx4;
use phishlens_core::{build_function_schema, MockRules, RawEmail, Tokenizer};
use proptest::prelude::*;

const VARIANTS: [PromptVariant; 4] = [
    PromptVariant::Normal,
    PromptVariant::Simple,
    PromptVariant::EmbeddedSchema,
    PromptVariant::EmbeddedSchemaSimple,
];

fn email(to: &str, body: &str) -> RawEmail {
    let text = format!(
        "From: Support <support@bank.example>\r\nTo: {to}\r\nCc: other@corp.example\r\n\
         X-Original-To: {to}\r\nSubject: Notice\r\nContent-Type: text/plain\r\n\r\n{body}\r\n"
    );
    RawEmail::new(text.into_bytes()).unwrap()
}

#[test]
fn mock_round_trip_for_every_variant() {
    let rules = MockRules::default();
    for variant in VARIANTS {
        let schema = build_function_schema(variant);
        for (body, expected) in [("Please verify your account now.", true), ("Lunch at noon?", false)] {
            let prepared =
                prepare(&email("alice@corp.example", body), variant, &Approx4, &PrepareOptions::default()).unwrap();
            let response = rules.respond(&prepared.prompt.text, variant, &schema);
            let (verdict, _) = interpret(&response, &schema, variant).unwrap();
            assert_eq!(verdict.is_phishing, expected, "{variant:?}");
            assert_eq!(verdict.phishing_score.is_some(), !variant.is_simple(), "{variant:?}");
        }
    }
}

proptest! {
    #[test]
    fn prompt_hides_recipients_and_respects_budget(
        user in "[a-z]{3,12}",
        body in proptest::collection::vec("[ -~]{0,120}", 0..400),
        variant in proptest::sample::select(VARIANTS.to_vec()),
    ) {
        let address = format!("{user}@victim.example");
        let body = body.join("\r\n");
        let options = PrepareOptions::default();
        let prepared = prepare(&email(&address, &body), variant, &Approx4, &options).unwrap();
        let slot = prepared.prompt.email_text();
        prop_assert_eq!(extract_email_slot(&prepared.prompt.text), Some(slot));
        prop_assert!(slot.contains(DEFAULT_DUMMY_ADDRESS));
        if !body.contains(&address) {
            prop_assert!(!slot.contains(&address));
        }
        prop_assert!(Approx4.count(slot) <= options.budget.limit());
        prop_assert_eq!(prepared.prompt.email_token_count, Approx4.count(slot));
    }
}
