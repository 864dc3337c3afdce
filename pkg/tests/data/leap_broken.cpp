#include <iostream>
using namespace std;

int main() {
    int year
    cin >> year;
    if (year % 4 == 0) {
        cout << "Leap year" << endl;
    } else {
        cout << "Common year" << endl;
    }
    return 0;
}
