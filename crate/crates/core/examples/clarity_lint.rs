//! The instruction-clarity linter on a deliberately sloppy configuration.

use crowdqc::config::{lint_clarity, Category, PaymentInputs, QualityControlConfig, TaskConfig, Template};

fn main() {
    let config = TaskConfig {
        template: Template::IntentClassification,
        title: "Intents".into(),
        general_instructions: "Label it.".into(),
        categories: vec![
            Category { name: "greeting".into(), ..blank() },
            Category { name: "goodbye".into(), instructions: "The user ends the chat.".into(), ..blank() },
        ],
        payment: PaymentInputs::new(2.0),
        qc: QualityControlConfig::default(),
        consent: Default::default(),
        style: Default::default(),
        feedback_enabled: false,
        agent_endpoint: None,
    };
    let report = lint_clarity(&config);
    for f in &report.findings {
        println!("{:<8} {:<28} {}", format!("{:?}", f.severity), f.code, f.message);
    }
    println!("blocking errors: {}", report.has_errors());
}

fn blank() -> Category {
    Category {
        name: String::new(),
        instructions: String::new(),
        examples: vec![],
        counterexamples: vec![],
        answer_options: vec![],
    }
}
