#include <iostream>
using namespace std;

int main() {
    int year;
    bool isLeap = false;
    cin >> year;
    if (year % 4 == 0 && year % 100 != 0) {
        isLeap = true;
    }
    if (year % 400 == 0) {
        isLeap = true;
    }
    if (isLeap) {
        cout << "Leap year" << endl;
    }
    if (!isLeap) {
        cout << "Common year" << endl;
    }
    return 0;
}
