//! Runs SQL over an in-memory table and shows which source rows each
//! result row came from.
//!
//! cargo run --example query_engine

use tabreason::sql;
use tabreason::table::{RawTable, Table};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/golden/table.json");
    let raw: RawTable = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let table = Table::load(&raw)?;

    let queries = [
        "SELECT year FROM w WHERE \"national cup\" = 'champion'",
        "SELECT MAX(year) - MIN(year) FROM w WHERE \"national cup\" = 'champion'",
        "SELECT playoffs, COUNT(*) FROM w GROUP BY playoffs ORDER BY COUNT(*) DESC",
        "SELECT year, playoffs FROM w WHERE playoffs LIKE '%final%' LIMIT 3",
        "SELECT year FROM w WHERE division = 'no such division'",
        "SELECT nonexistent FROM w",
    ];
    for q in queries {
        println!("> {q}");
        match sql::run(q, &table) {
            Ok(rs) => {
                println!("  columns: {:?}", rs.columns);
                for row in &rs.rows {
                    let values: Vec<String> = row.values.iter().map(|v| v.to_string()).collect();
                    println!("  {:?} from rows {}", values, row.source_row_ids);
                }
                if rs.is_empty() {
                    println!("  (no rows)");
                }
            }
            Err(e) => println!("  error: {e}"),
        }
    }
    Ok(())
}
